#pragma once

#include <functional>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "taxsearch/catalog.hpp"
#include "taxsearch/common.hpp"
#include "taxsearch/metrics.hpp"
#include "taxsearch/pipeline.hpp"

namespace taxsearch {

enum class Cohort { expert, trainee };

const char* to_string(Cohort cohort);
Cohort parse_cohort(const std::string& name);

struct EvalSample {
    std::string query_id;
    std::string query_text;
    std::set<std::string> relevant_ids; // non-empty
    Cohort cohort = Cohort::expert;
};

using Dataset = std::vector<EvalSample>;

// JSON-lines: {query_id, query_text, relevant_ids, cohort} per line.
Dataset load_dataset(std::istream& source, const Catalog& catalog);

// JSON object: {query_id: [additional relevant ids]}.
using JudgmentSupplement = std::map<std::string, std::set<std::string>>;
JudgmentSupplement load_supplement(std::istream& source, const Catalog& catalog);

// Per-query union of relevant sets; the input dataset is left untouched.
Dataset merge_judgments(const Dataset& dataset, const JudgmentSupplement& supplement);

struct BenchSpec {
    std::uint64_t seed = 1;
    int n_segments = 2;
    int fanout = 2; // children per node at levels 2 and 3
    int n_commodity_classes = 8;
    int products_per_class = 10;
    int queries_per_class = 3;
    // Fraction of query vocabulary drawn from category metadata that never
    // appears in product text.
    double mismatch_rate = 0.0;
    double definition_rate = 0.68;
    double keyword_rate = 0.53;
};

BenchSpec bench_spec_from_json(const Json& j);
OrderedJson bench_spec_to_json(const BenchSpec& spec);

struct SyntheticBundle {
    Taxonomy taxonomy;
    std::vector<Product> products;
    Dataset dataset;
    // The same queries with every discriminative token replaced by an alias
    // from `synonyms` (alias -> canonical), for vocabulary-mismatch runs.
    Dataset synonym_queries;
    std::map<std::string, std::string> synonyms;
};

// Deterministic desk-scale benchmark: 4-level taxonomy, class-disjoint token
// pools, relevance = commodity-class membership. Queries mix product-text
// tokens and metadata-only tokens at mismatch_rate.
SyntheticBundle generate_synthetic(const BenchSpec& spec);

// Serializers for the on-disk formats (also used by the synth subcommand).
OrderedJson taxonomy_to_json(const Taxonomy& taxonomy);
OrderedJson product_to_json(const Product& product);
std::string products_to_jsonl(const std::vector<Product>& products);
std::string dataset_to_jsonl(const Dataset& dataset);

struct ReportRow {
    std::string fingerprint;
    Cohort cohort = Cohort::expert;
    MetricVector metrics;
    double mean_latency_ms = 0.0;
    int query_count = 0;
};

struct MetricReport {
    int k = 5;
    std::vector<ReportRow> rows; // one row per (config, cohort), grid order
};

using OutcomeSink = std::function<void(const SearchConfig&, const SearchOutcome&)>;

// Runs every query of the dataset against every grid config. Queries may be
// parallelized over `workers`; metrics are independent of worker count.
MetricReport run_experiment(SearchEngine& engine, const std::vector<SearchConfig>& grid,
                            const Dataset& dataset, int k = 5, int workers = 1,
                            const OutcomeSink& sink = {});

enum class ReportFormat { csv, markdown };

std::string emit_report(const MetricReport& report, ReportFormat format);
MetricReport parse_report_csv(const std::string& csv);

} // namespace taxsearch
