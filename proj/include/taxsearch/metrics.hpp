#pragma once

#include <set>
#include <string>
#include <vector>

#include "taxsearch/common.hpp"

namespace taxsearch {

struct Judgment {
    std::string query_id;
    std::set<std::string> relevant_ids; // non-empty
};

struct RankedResult {
    std::string query_id;
    std::vector<std::string> ids; // duplicate-free
};

struct MetricVector {
    double hit_rate_at_k = 0.0;
    double hits_at_k = 0.0;
    double mrr = 0.0;
    double recall = 0.0;
    double precision_at_k = 0.0;
    double r_precision = 0.0;
    double r_precision_at_k = 0.0; // max(r_precision, precision_at_k)
    int k = 0;
};

// Per-query metrics. MRR counts the first relevant item anywhere in the
// returned list; recall and r_precision are computed over the full returned
// list with no imputation for short lists.
double hit_rate_at_k(const RankedResult& result, const Judgment& judgment, int k);
double hits_at_k(const RankedResult& result, const Judgment& judgment, int k);
double mrr(const RankedResult& result, const Judgment& judgment);
double recall(const RankedResult& result, const Judgment& judgment);
double precision_at_k(const RankedResult& result, const Judgment& judgment, int k);
double r_precision(const RankedResult& result, const Judgment& judgment);
double r_precision_at_k(const RankedResult& result, const Judgment& judgment, int k);

MetricVector compute_metrics(const RankedResult& result, const Judgment& judgment, int k);

// Macro average: each query weighs 1. All inputs must share the same k.
MetricVector aggregate(const std::vector<MetricVector>& per_query);

} // namespace taxsearch
