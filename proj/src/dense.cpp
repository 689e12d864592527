#include "taxsearch/dense.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

namespace taxsearch {

namespace {

constexpr char kVecMagic[8] = {'T', 'S', 'V', 'I', 'D', 'X', '\0', '\0'};
constexpr std::uint32_t kVecVersion = 1;
// Second hash basis for the sign bit, distinct from the bucket hash.
constexpr std::uint64_t kSignSeed = 0x9E3779B97F4A7C15ULL;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& path) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw DataError("truncated index file: " + path);
    return value;
}

void write_string(std::ostream& out, const std::string& s) {
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const std::string& path) {
    auto len = read_raw<std::uint32_t>(in, path);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw DataError("truncated index file: " + path);
    return s;
}

double dot(std::span<const float> u, std::span<const float> v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        acc += static_cast<double>(u[i]) * static_cast<double>(v[i]);
    return acc;
}

} // namespace

double l2_norm(std::span<const float> v) {
    double acc = 0.0;
    for (float x : v) acc += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(acc);
}

void l2_normalize(EmbeddingVector& v) {
    double norm = l2_norm(v);
    if (norm == 0.0) return;
    for (float& x : v) x = static_cast<float>(x / norm);
}

double cosine(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size())
        throw DataError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()) + ")");
    double nu = l2_norm(u);
    double nv = l2_norm(v);
    if (nu == 0.0 || nv == 0.0) throw DataError("cosine: zero vector");
    return dot(u, v) / (nu * nv);
}

std::vector<EmbeddingVector> embed_texts(EmbeddingProvider& provider,
                                         const std::vector<std::string>& texts, InputRole role) {
    auto vectors = provider.embed(texts, role);
    if (vectors.size() != texts.size())
        throw ProviderError("provider '" + provider.name() + "' returned " +
                            std::to_string(vectors.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
    for (const auto& v : vectors) {
        if (static_cast<int>(v.size()) != provider.dimension())
            throw ProviderError("provider '" + provider.name() + "' returned a vector of length " +
                                std::to_string(v.size()) + ", expected " +
                                std::to_string(provider.dimension()));
        for (float x : v)
            if (!std::isfinite(x))
                throw ProviderError("provider '" + provider.name() +
                                    "' returned a non-finite value");
    }
    return vectors;
}

EmbeddingVector hashing_embed(const std::string& text, int dimension,
                              const std::map<std::string, std::string>& synonyms) {
    if (dimension < 8) throw UsageError("hashing embedder dimension must be >= 8");
    auto tokens = tokenize(text);
    if (tokens.empty()) throw DataError("hashing embedder: empty token stream");

    EmbeddingVector v(static_cast<std::size_t>(dimension), 0.0f);
    for (auto& token : tokens) {
        auto it = synonyms.find(token);
        const std::string& mapped = it == synonyms.end() ? token : it->second;
        std::uint64_t bucket = fnv1a64(mapped) % static_cast<std::uint64_t>(dimension);
        float sign = (fnv1a64(mapped, kSignSeed) & 1) ? 1.0f : -1.0f;
        v[bucket] += sign;
    }
    l2_normalize(v);
    return v;
}

HashingProvider::HashingProvider(int dimension, std::map<std::string, std::string> synonyms)
    : dimension_(dimension), synonyms_(std::move(synonyms)) {
    if (dimension < 8) throw UsageError("hashing embedder dimension must be >= 8");
}

std::vector<EmbeddingVector> HashingProvider::embed(const std::vector<std::string>& texts,
                                                    InputRole) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) out.push_back(hashing_embed(text, dimension_, synonyms_));
    return out;
}

VectorIndex VectorIndex::build(const std::vector<ComposedDocument>& docs,
                               EmbeddingProvider& provider, std::uint64_t corpus_hash) {
    VectorIndex index;
    index.stamp_.provider_name = provider.name();
    index.stamp_.dimension = provider.dimension();
    index.stamp_.corpus_hash = corpus_hash;
    if (!docs.empty()) {
        index.stamp_.data_level = docs.front().data_level;
        index.stamp_.category_level = docs.front().category_level;
    }

    std::vector<std::string> texts;
    texts.reserve(docs.size());
    index.doc_ids_.reserve(docs.size());
    std::unordered_set<std::string> seen;
    for (const auto& doc : docs) {
        if (!seen.insert(doc.product_id).second)
            throw DataError("duplicate doc id '" + doc.product_id + "'");
        index.doc_ids_.push_back(doc.product_id);
        texts.push_back(doc.text);
    }
    if (docs.empty()) return index;

    auto vectors = embed_texts(provider, texts, InputRole::document);
    const auto d = static_cast<std::size_t>(provider.dimension());
    index.matrix_.resize(docs.size() * d);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        auto& v = vectors[i];
        if (l2_norm(v) == 0.0)
            throw DataError("zero vector for document '" + index.doc_ids_[i] +
                            "'; cosine is undefined");
        l2_normalize(v);
        std::copy(v.begin(), v.end(), index.matrix_.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return index;
}

std::span<const float> VectorIndex::row(std::size_t i) const {
    const auto d = static_cast<std::size_t>(stamp_.dimension);
    return {matrix_.data() + i * d, d};
}

std::vector<ScoredDoc> VectorIndex::search(std::span<const float> query, int top_k,
                                           const std::string& expected_provider) const {
    if (top_k < 1) throw UsageError("top_k must be >= 1");
    if (!expected_provider.empty() && expected_provider != stamp_.provider_name)
        throw DataError("provenance mismatch: index built with provider '" +
                        stamp_.provider_name + "', query embedded by '" + expected_provider + "'");
    if (doc_ids_.empty()) return {};
    if (static_cast<int>(query.size()) != stamp_.dimension)
        throw DataError("dense search: query dimension " + std::to_string(query.size()) +
                        " does not match index dimension " + std::to_string(stamp_.dimension));

    EmbeddingVector q(query.begin(), query.end());
    double norm = l2_norm(q);
    if (norm == 0.0) throw DataError("dense search: zero query vector");
    l2_normalize(q);

    std::vector<double> scores(doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) scores[i] = dot(row(i), q);

    std::vector<std::uint32_t> order(doc_ids_.size());
    std::iota(order.begin(), order.end(), 0u);
    auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return doc_ids_[a] < doc_ids_[b];
    };
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(top_k), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      better);
    order.resize(k);

    std::vector<ScoredDoc> out;
    out.reserve(k);
    for (auto i : order) out.push_back(ScoredDoc{doc_ids_[i], scores[i]});
    return out;
}

std::vector<ScoredDoc> dense_search(const VectorIndex& index, std::span<const float> query,
                                    int top_k) {
    return index.search(query, top_k);
}

void VectorIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write index file: " + path);
    out.write(kVecMagic, sizeof(kVecMagic));
    write_raw<std::uint32_t>(out, kVecVersion);
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(stamp_.dimension));
    write_string(out, stamp_.provider_name);
    write_raw<std::uint8_t>(out, static_cast<std::uint8_t>(stamp_.data_level));
    write_raw<std::uint8_t>(out, static_cast<std::uint8_t>(stamp_.category_level));
    write_raw<std::uint64_t>(out, stamp_.corpus_hash);
    write_raw<std::uint64_t>(out, doc_ids_.size());
    for (const auto& id : doc_ids_) write_string(out, id);
    out.write(reinterpret_cast<const char*>(matrix_.data()),
              static_cast<std::streamsize>(matrix_.size() * sizeof(float)));
    if (!out) throw DataError("short write: " + path);
}

VectorIndex VectorIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open index file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + 8, kVecMagic))
        throw DataError("not a vector index file: " + path);
    auto version = read_raw<std::uint32_t>(in, path);
    if (version != kVecVersion)
        throw DataError("unsupported vector index version " + std::to_string(version) + ": " +
                        path);

    VectorIndex index;
    index.stamp_.dimension = static_cast<int>(read_raw<std::uint32_t>(in, path));
    index.stamp_.provider_name = read_string(in, path);
    auto dl = read_raw<std::uint8_t>(in, path);
    if (dl > 2) throw DataError("corrupt data level in index file: " + path);
    index.stamp_.data_level = static_cast<DataLevel>(dl);
    auto cl = read_raw<std::uint8_t>(in, path);
    if (cl > kMaxCategoryLevel) throw DataError("corrupt category level in index file: " + path);
    index.stamp_.category_level = cl;
    index.stamp_.corpus_hash = read_raw<std::uint64_t>(in, path);
    auto doc_count = read_raw<std::uint64_t>(in, path);
    index.doc_ids_.reserve(doc_count);
    for (std::uint64_t i = 0; i < doc_count; ++i) index.doc_ids_.push_back(read_string(in, path));
    index.matrix_.resize(doc_count * static_cast<std::uint64_t>(index.stamp_.dimension));
    in.read(reinterpret_cast<char*>(index.matrix_.data()),
            static_cast<std::streamsize>(index.matrix_.size() * sizeof(float)));
    if (!in) throw DataError("truncated index file: " + path);
    return index;
}

} // namespace taxsearch
