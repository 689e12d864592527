#include "taxsearch/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace taxsearch {

double overlap_score(const std::string& query, const std::string& doc_text) {
    auto qtokens = tokenize(query);
    std::set<std::string> qset(qtokens.begin(), qtokens.end());
    auto dtokens = tokenize(doc_text);
    std::set<std::string> dset(dtokens.begin(), dtokens.end());
    std::size_t hits = 0;
    for (const auto& t : qset)
        if (dset.count(t)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(std::max<std::size_t>(1, qset.size()));
}

std::vector<double> OverlapReranker::score(const std::string& query,
                                           const std::vector<std::string>& documents) {
    std::vector<double> scores;
    scores.reserve(documents.size());
    for (const auto& doc : documents) scores.push_back(overlap_score(query, doc));
    return scores;
}

RerankedList rerank(Reranker& reranker, const std::string& query,
                    const std::vector<ScoredDoc>& candidates, const DocTextLookup& docs,
                    bool fallback_on_error) {
    std::vector<std::string> texts;
    texts.reserve(candidates.size());
    for (const auto& c : candidates) {
        const std::string* text = docs(c.doc_id);
        if (!text) throw DataError("rerank: unresolved doc id '" + c.doc_id + "'");
        texts.push_back(*text);
    }

    RerankedList out;
    if (candidates.empty()) return out;

    std::vector<double> scores;
    try {
        scores = reranker.score(query, texts);
    } catch (const ProviderError&) {
        if (!fallback_on_error) throw;
        out.items = candidates;
        out.degraded = true;
        return out;
    }
    if (scores.size() != candidates.size())
        throw ProviderError("reranker '" + reranker.name() + "' returned " +
                            std::to_string(scores.size()) + " scores for " +
                            std::to_string(candidates.size()) + " candidates");
    for (double s : scores)
        if (!std::isfinite(s))
            throw ProviderError("reranker '" + reranker.name() + "' returned a non-finite score");

    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    out.items.reserve(candidates.size());
    for (auto i : order) out.items.push_back(ScoredDoc{candidates[i].doc_id, scores[i]});
    return out;
}

} // namespace taxsearch
