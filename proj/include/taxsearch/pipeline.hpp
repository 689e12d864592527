#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "taxsearch/catalog.hpp"
#include "taxsearch/common.hpp"
#include "taxsearch/dense.hpp"
#include "taxsearch/lexical.hpp"
#include "taxsearch/rerank.hpp"
#include "taxsearch/rewrite.hpp"

namespace taxsearch {

struct DenseRetrieverConfig {
    std::string provider = "hashing"; // hashing | remote
    int dimension = 512;
    std::string synonyms_path; // hashing: optional JSON map alias -> canonical token
    std::string model;         // remote only
    std::string url;           // remote only; EMBED_URL when empty
    std::string query_instruction;
    std::string document_instruction;
    int batch_size = 16;
    int parallelism = 4;
};

struct RetrieverConfig {
    enum class Kind { dense, bm25 };
    Kind kind = Kind::dense;
    DenseRetrieverConfig dense;
    Bm25Params bm25;
};

struct RewriteStageConfig {
    bool enabled = false; // rewriting hurt accuracy in every measured setup
    std::string rewriter = "passthrough"; // passthrough | rules | remote
    std::vector<std::string> stoplist;    // rules: overrides the default list
    std::string template_path;            // remote: system prompt file
    std::string model;                    // remote only
    std::string url;                      // remote only; REWRITE_URL when empty
};

struct RerankStageConfig {
    bool enabled = false;
    std::string reranker = "overlap"; // overlap | remote
    std::string model;                // remote only
    std::string url;                  // remote only; RERANK_URL when empty
    bool fallback_first_stage = false; // opt-in: degrade to first-stage order on failure
    bool use_original_query = false;   // rerank with the pre-rewrite query
};

struct SearchConfig {
    DataLevel data_level = DataLevel::basic;
    CategoryLevel category_level = 1;
    RetrieverConfig retriever;
    int top_k = 200;
    RewriteStageConfig rewrite;
    RerankStageConfig rerank;
    int final_k = 10;
};

SearchConfig search_config_from_json(const Json& j);
OrderedJson search_config_to_json(const SearchConfig& config);
SearchConfig load_search_config(const std::string& path);
void validate_search_config(const SearchConfig& config);

struct StageTimings {
    double rewrite_ms = 0.0;
    double embed_ms = 0.0;
    double retrieve_ms = 0.0;
    double rerank_ms = 0.0;
    double total_ms = 0.0; // >= each stage; stages not run report 0
};

struct SearchOutcome {
    std::string query_id;
    std::vector<ScoredDoc> results; // at most final_k entries
    StageTimings timings;
    bool rewrite_degraded = false;
    bool rerank_degraded = false;
    int rerank_scored = 0; // candidates scored by the reranker (== top_k cap)
    std::string rewritten_query;
    std::string config_fingerprint;
};

OrderedJson outcome_to_json(const SearchOutcome& outcome, const Catalog* catalog = nullptr);

// Creates pipeline stages from config; virtual so tests can count or stub
// provider construction.
class StageFactory {
public:
    virtual ~StageFactory() = default;
    virtual std::shared_ptr<EmbeddingProvider> make_embedder(const DenseRetrieverConfig& config);
    virtual std::shared_ptr<Reranker> make_reranker(const RerankStageConfig& config);
    virtual std::shared_ptr<QueryRewriter> make_rewriter(const RewriteStageConfig& config);
};

struct PreparedIndex {
    std::string key;         // retriever descriptor + data/category level
    std::string fingerprint; // cache file stem
    std::optional<VectorIndex> dense;
    std::optional<Bm25Index> bm25;
    std::unordered_map<std::string, std::string> doc_texts;
    bool cache_hit = false;
};

class IndexSet {
public:
    void insert(PreparedIndex index);
    const PreparedIndex& require(const SearchConfig& config) const;
    const PreparedIndex* find(const SearchConfig& config) const;
    std::size_t size() const { return by_key_.size(); }
    const std::map<std::string, PreparedIndex>& entries() const { return by_key_; }

private:
    std::map<std::string, PreparedIndex> by_key_;
};

// Key identifying the index an individual config needs: retriever identity
// plus data/category level. top_k, rewrite and rerank are query-time knobs.
std::string index_key(const SearchConfig& config);

// Stable fingerprint of a SearchConfig joined with the provenance stamp of
// the index it ran against.
std::string config_fingerprint(const SearchConfig& config, const PreparedIndex& index);

// Builds (or loads from cache_dir, when non-empty) one index per distinct
// index_key in `configs`. Cached files are keyed by a fingerprint covering
// the retriever identity, composition parameters, and corpus content, so a
// rebuild with unchanged inputs performs zero embedding calls.
IndexSet prepare_indices(const Catalog& catalog, const Taxonomy& taxonomy,
                         const std::vector<SearchConfig>& configs,
                         const std::filesystem::path& cache_dir, StageFactory& factory);

class SearchEngine {
public:
    SearchEngine(std::shared_ptr<const Catalog> catalog, std::shared_ptr<const Taxonomy> taxonomy,
                 IndexSet indices, std::shared_ptr<StageFactory> factory);

    // rewrite -> embed -> retrieve -> optional rerank -> truncate to final_k,
    // with per-stage wall-clock timings. Reentrant; indices are immutable.
    SearchOutcome run_search(const SearchConfig& config, const std::string& query,
                             const std::string& query_id = {});

    const Catalog& catalog() const { return *catalog_; }
    const Taxonomy& taxonomy() const { return *taxonomy_; }
    const IndexSet& indices() const { return indices_; }

private:
    std::shared_ptr<EmbeddingProvider> embedder_for(const DenseRetrieverConfig& config);
    std::shared_ptr<Reranker> reranker_for(const RerankStageConfig& config);
    std::shared_ptr<QueryRewriter> rewriter_for(const RewriteStageConfig& config);

    std::shared_ptr<const Catalog> catalog_;
    std::shared_ptr<const Taxonomy> taxonomy_;
    IndexSet indices_;
    std::shared_ptr<StageFactory> factory_;

    std::mutex cache_mutex_;
    std::map<std::string, std::shared_ptr<EmbeddingProvider>> embedder_cache_;
    std::map<std::string, std::shared_ptr<Reranker>> reranker_cache_;
    std::map<std::string, std::shared_ptr<QueryRewriter>> rewriter_cache_;
};

std::map<std::string, std::string> load_synonyms(const std::string& path);

} // namespace taxsearch
