#pragma once

#include <functional>
#include <string>
#include <vector>

#include "taxsearch/common.hpp"
#include "taxsearch/lexical.hpp"

namespace taxsearch {

enum class RerankerKind { remote_http, token_overlap_offline };

class Reranker {
public:
    virtual ~Reranker() = default;
    virtual const std::string& name() const = 0;
    virtual RerankerKind kind() const = 0;
    // One finite relevance score per document; higher means more relevant.
    virtual std::vector<double> score(const std::string& query,
                                      const std::vector<std::string>& documents) = 0;
};

// |tokenset(query) ∩ tokenset(doc)| / max(1, |tokenset(query)|)
double overlap_score(const std::string& query, const std::string& doc_text);

class OverlapReranker : public Reranker {
public:
    const std::string& name() const override { return name_; }
    RerankerKind kind() const override { return RerankerKind::token_overlap_offline; }
    std::vector<double> score(const std::string& query,
                              const std::vector<std::string>& documents) override;

private:
    std::string name_ = "overlap";
};

using DocTextLookup = std::function<const std::string*(const std::string& doc_id)>;

struct RerankedList {
    std::vector<ScoredDoc> items;
    // True when the reranker failed and the caller opted into falling back
    // to first-stage order; never set silently.
    bool degraded = false;
};

// Reorders candidates by reranker score, descending. The output is a
// permutation of the input; equal scores keep first-stage order (ties beyond
// that cannot occur since first-stage rank is total).
RerankedList rerank(Reranker& reranker, const std::string& query,
                    const std::vector<ScoredDoc>& candidates, const DocTextLookup& docs,
                    bool fallback_on_error = false);

} // namespace taxsearch
