#include "taxsearch/metrics.hpp"

#include <algorithm>
#include <unordered_set>

namespace taxsearch {

namespace {

void validate(const RankedResult& result, const Judgment& judgment) {
    if (judgment.relevant_ids.empty())
        throw DataError("judgment '" + judgment.query_id + "' has an empty relevant set");
    std::unordered_set<std::string> seen;
    for (const auto& id : result.ids)
        if (!seen.insert(id).second)
            throw DataError("ranked result '" + result.query_id + "' contains duplicate id '" +
                            id + "'");
}

std::size_t relevant_in_prefix(const RankedResult& result, const Judgment& judgment,
                               std::size_t prefix) {
    std::size_t count = 0;
    const std::size_t n = std::min(prefix, result.ids.size());
    for (std::size_t i = 0; i < n; ++i)
        if (judgment.relevant_ids.count(result.ids[i])) ++count;
    return count;
}

} // namespace

double hit_rate_at_k(const RankedResult& result, const Judgment& judgment, int k) {
    if (k < 1) throw UsageError("k must be >= 1");
    validate(result, judgment);
    return relevant_in_prefix(result, judgment, static_cast<std::size_t>(k)) > 0 ? 1.0 : 0.0;
}

double hits_at_k(const RankedResult& result, const Judgment& judgment, int k) {
    if (k < 1) throw UsageError("k must be >= 1");
    validate(result, judgment);
    return static_cast<double>(relevant_in_prefix(result, judgment, static_cast<std::size_t>(k)));
}

double mrr(const RankedResult& result, const Judgment& judgment) {
    validate(result, judgment);
    for (std::size_t i = 0; i < result.ids.size(); ++i)
        if (judgment.relevant_ids.count(result.ids[i]))
            return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

double recall(const RankedResult& result, const Judgment& judgment) {
    validate(result, judgment);
    std::size_t hits = relevant_in_prefix(result, judgment, result.ids.size());
    return static_cast<double>(hits) / static_cast<double>(judgment.relevant_ids.size());
}

double precision_at_k(const RankedResult& result, const Judgment& judgment, int k) {
    if (k < 1) throw UsageError("k must be >= 1");
    validate(result, judgment);
    return static_cast<double>(relevant_in_prefix(result, judgment, static_cast<std::size_t>(k))) /
           static_cast<double>(k);
}

double r_precision(const RankedResult& result, const Judgment& judgment) {
    validate(result, judgment);
    const std::size_t r = judgment.relevant_ids.size();
    return static_cast<double>(relevant_in_prefix(result, judgment, r)) / static_cast<double>(r);
}

double r_precision_at_k(const RankedResult& result, const Judgment& judgment, int k) {
    return std::max(r_precision(result, judgment), precision_at_k(result, judgment, k));
}

MetricVector compute_metrics(const RankedResult& result, const Judgment& judgment, int k) {
    MetricVector m;
    m.k = k;
    m.hit_rate_at_k = hit_rate_at_k(result, judgment, k);
    m.hits_at_k = hits_at_k(result, judgment, k);
    m.mrr = mrr(result, judgment);
    m.recall = recall(result, judgment);
    m.precision_at_k = precision_at_k(result, judgment, k);
    m.r_precision = r_precision(result, judgment);
    m.r_precision_at_k = std::max(m.r_precision, m.precision_at_k);
    return m;
}

MetricVector aggregate(const std::vector<MetricVector>& per_query) {
    if (per_query.empty()) throw DataError("aggregate: no metric vectors");
    MetricVector mean;
    mean.k = per_query.front().k;
    for (const auto& m : per_query) {
        if (m.k != mean.k) throw DataError("aggregate: mixed k values");
        mean.hit_rate_at_k += m.hit_rate_at_k;
        mean.hits_at_k += m.hits_at_k;
        mean.mrr += m.mrr;
        mean.recall += m.recall;
        mean.precision_at_k += m.precision_at_k;
        mean.r_precision += m.r_precision;
        mean.r_precision_at_k += m.r_precision_at_k;
    }
    const double n = static_cast<double>(per_query.size());
    mean.hit_rate_at_k /= n;
    mean.hits_at_k /= n;
    mean.mrr /= n;
    mean.recall /= n;
    mean.precision_at_k /= n;
    mean.r_precision /= n;
    mean.r_precision_at_k /= n;
    return mean;
}

} // namespace taxsearch
