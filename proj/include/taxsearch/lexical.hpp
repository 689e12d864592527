#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "taxsearch/catalog.hpp"
#include "taxsearch/common.hpp"

namespace taxsearch {

// Lowercased maximal alphanumeric runs; everything else separates tokens.
// ASCII and the common European letter ranges are case-folded, other
// code points pass through unchanged.
std::vector<std::string> tokenize(const std::string& text);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
    // Repeated query terms count once; document-side term frequencies are
    // unaffected.
    bool query_term_set_semantics = true;
};

struct Posting {
    std::uint32_t doc_index = 0;
    std::uint32_t term_frequency = 0;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
};

class Bm25Index {
public:
    Bm25Index() = default;

    static Bm25Index build(const std::vector<ComposedDocument>& docs, const Bm25Params& params);

    // score(q,d) = sum_t idf(t) * tf*(k1+1) / (tf + k1*(1-b+b*|d|/avgdl)),
    // idf(t) = ln(1 + (N-df+0.5)/(df+0.5)). Descending score, ties by
    // ascending doc id, zero-score docs excluded, at most top_k results.
    std::vector<ScoredDoc> search(const std::string& query, int top_k) const;

    std::size_t doc_count() const { return doc_ids_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    const Bm25Params& params() const { return params_; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    const std::vector<std::uint32_t>& doc_lengths() const { return doc_lengths_; }
    const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }

    void save(const std::string& path) const;
    static Bm25Index load(const std::string& path);

private:
    Bm25Params params_;
    std::map<std::string, std::vector<Posting>> postings_;
    std::vector<std::string> doc_ids_;      // index-aligned with doc_lengths_
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
};

} // namespace taxsearch
