#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "taxsearch/catalog.hpp"
#include "taxsearch/common.hpp"
#include "taxsearch/lexical.hpp"

namespace taxsearch {

using EmbeddingVector = std::vector<float>;

// dot(u,v) / (|u||v|), accumulated in double.
double cosine(std::span<const float> u, std::span<const float> v);

double l2_norm(std::span<const float> v);
void l2_normalize(EmbeddingVector& v); // zero vectors are left untouched

enum class ProviderKind { remote_http, hashing_offline };
enum class InputRole { document, query };

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual const std::string& name() const = 0;
    virtual int dimension() const = 0;
    virtual ProviderKind kind() const = 0;
    // One vector per text, order-preserving, each of dimension().
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                               InputRole role) = 0;
};

std::vector<EmbeddingVector> embed_texts(EmbeddingProvider& provider,
                                         const std::vector<std::string>& texts,
                                         InputRole role = InputRole::document);

// Deterministic bag-of-tokens feature hashing: each token lands in bucket
// fnv1a(token) % d with a sign drawn from a second hash, then the vector is
// L2-normalized. Tokens are routed through the synonym table first, so
// configured aliases embed identically to their canonical term.
EmbeddingVector hashing_embed(const std::string& text, int dimension,
                              const std::map<std::string, std::string>& synonyms = {});

class HashingProvider : public EmbeddingProvider {
public:
    explicit HashingProvider(int dimension, std::map<std::string, std::string> synonyms = {});

    const std::string& name() const override { return name_; }
    int dimension() const override { return dimension_; }
    ProviderKind kind() const override { return ProviderKind::hashing_offline; }
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                       InputRole role) override;

private:
    std::string name_ = "hashing";
    int dimension_;
    std::map<std::string, std::string> synonyms_;
};

// Provenance stamp carried by every persisted vector index; searching with a
// query from a different provider or dimension is rejected.
struct IndexStamp {
    std::string provider_name;
    int dimension = 0;
    DataLevel data_level = DataLevel::minimal;
    CategoryLevel category_level = 0;
    std::uint64_t corpus_hash = 0;
};

class VectorIndex {
public:
    VectorIndex() = default;

    static VectorIndex build(const std::vector<ComposedDocument>& docs,
                             EmbeddingProvider& provider, std::uint64_t corpus_hash = 0);

    // Exact top-k by cosine, descending; ties by ascending doc id;
    // |result| = min(top_k, size()). If expected_provider is non-empty it
    // must match the stamp.
    std::vector<ScoredDoc> search(std::span<const float> query, int top_k,
                                  const std::string& expected_provider = {}) const;

    std::size_t size() const { return doc_ids_.size(); }
    int dimension() const { return stamp_.dimension; }
    const IndexStamp& stamp() const { return stamp_; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    std::span<const float> row(std::size_t i) const;

    void save(const std::string& path) const;
    static VectorIndex load(const std::string& path);

private:
    IndexStamp stamp_;
    std::vector<std::string> doc_ids_;
    std::vector<float> matrix_; // row-major, rows L2-normalized
};

std::vector<ScoredDoc> dense_search(const VectorIndex& index, std::span<const float> query,
                                    int top_k);

} // namespace taxsearch
