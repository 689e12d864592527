#include "taxsearch/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>

#include "taxsearch/remote.hpp"

namespace taxsearch {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string env_or(const char* var, const std::string& fallback) {
    const char* value = std::getenv(var);
    return value && *value ? std::string(value) : fallback;
}

std::string require_url(const std::string& configured, const char* env_var,
                        const std::string& what) {
    std::string url = configured.empty() ? env_or(env_var, "") : configured;
    if (url.empty())
        throw UsageError(what + " endpoint URL missing: set it in the config or via " +
                         std::string(env_var));
    return url;
}

void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) throw DataError(where + ": unknown field '" + key + "'");
    }
}

std::uint64_t corpus_hash(const std::vector<ComposedDocument>& docs) {
    std::uint64_t h = kFnvOffsetBasis;
    for (const auto& doc : docs) {
        h = fnv1a64(doc.product_id, h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(doc.text, h);
        h = fnv1a64("\x1e", h);
    }
    return h;
}

// Identity of the index a config needs, as canonical JSON. Includes the
// synonym table content (when set) since it participates in embedding.
OrderedJson retriever_descriptor(const SearchConfig& config) {
    OrderedJson d;
    d["data_level"] = to_string(config.data_level);
    d["category_level"] = config.category_level;
    if (config.retriever.kind == RetrieverConfig::Kind::dense) {
        d["kind"] = "dense";
        d["provider"] = config.retriever.dense.provider;
        d["dimension"] = config.retriever.dense.dimension;
        if (config.retriever.dense.provider == "remote")
            d["model"] = config.retriever.dense.model;
        if (!config.retriever.dense.synonyms_path.empty()) {
            auto synonyms = load_synonyms(config.retriever.dense.synonyms_path);
            OrderedJson syn = OrderedJson::object();
            for (const auto& [alias, canonical] : synonyms) syn[alias] = canonical;
            d["synonyms"] = std::move(syn);
        }
        if (!config.retriever.dense.document_instruction.empty())
            d["document_instruction"] = config.retriever.dense.document_instruction;
    } else {
        d["kind"] = "bm25";
        d["k1"] = config.retriever.bm25.k1;
        d["b"] = config.retriever.bm25.b;
        d["query_term_set_semantics"] = config.retriever.bm25.query_term_set_semantics;
    }
    return d;
}

} // namespace

std::map<std::string, std::string> load_synonyms(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw DataError("malformed synonyms JSON in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw DataError("synonyms file must be a JSON object: " + path);
    std::map<std::string, std::string> out;
    for (const auto& [alias, canonical] : j.items()) {
        if (!canonical.is_string())
            throw DataError("synonym value for '" + alias + "' must be a string: " + path);
        out.emplace(alias, canonical.get<std::string>());
    }
    return out;
}

SearchConfig search_config_from_json(const Json& j) {
    if (!j.is_object()) throw DataError("search config must be a JSON object");
    reject_unknown_keys(j, {"data_level", "category_level", "retriever", "top_k", "rewrite",
                            "rerank", "final_k"},
                        "search config");
    SearchConfig config;
    if (j.contains("data_level")) config.data_level = parse_data_level(j["data_level"]);
    if (j.contains("category_level")) {
        if (!j["category_level"].is_number_integer())
            throw DataError("category_level must be an integer");
        config.category_level = j["category_level"].get<int>();
    }
    if (j.contains("retriever")) {
        const auto& r = j["retriever"];
        if (!r.is_object() || !r.contains("kind"))
            throw DataError("retriever must be an object with a 'kind'");
        std::string kind = r["kind"].get<std::string>();
        if (kind == "dense") {
            config.retriever.kind = RetrieverConfig::Kind::dense;
            reject_unknown_keys(r,
                                {"kind", "provider", "dimension", "synonyms", "model", "url",
                                 "query_instruction", "document_instruction", "batch_size",
                                 "parallelism"},
                                "retriever");
            auto& d = config.retriever.dense;
            if (r.contains("provider")) d.provider = r["provider"].get<std::string>();
            if (r.contains("dimension")) d.dimension = r["dimension"].get<int>();
            if (r.contains("synonyms")) d.synonyms_path = r["synonyms"].get<std::string>();
            if (r.contains("model")) d.model = r["model"].get<std::string>();
            if (r.contains("url")) d.url = r["url"].get<std::string>();
            if (r.contains("query_instruction"))
                d.query_instruction = r["query_instruction"].get<std::string>();
            if (r.contains("document_instruction"))
                d.document_instruction = r["document_instruction"].get<std::string>();
            if (r.contains("batch_size")) d.batch_size = r["batch_size"].get<int>();
            if (r.contains("parallelism")) d.parallelism = r["parallelism"].get<int>();
        } else if (kind == "bm25") {
            config.retriever.kind = RetrieverConfig::Kind::bm25;
            reject_unknown_keys(r, {"kind", "k1", "b", "query_term_set_semantics"}, "retriever");
            if (r.contains("k1")) config.retriever.bm25.k1 = r["k1"].get<double>();
            if (r.contains("b")) config.retriever.bm25.b = r["b"].get<double>();
            if (r.contains("query_term_set_semantics"))
                config.retriever.bm25.query_term_set_semantics =
                    r["query_term_set_semantics"].get<bool>();
        } else {
            throw DataError("unknown retriever kind '" + kind + "'");
        }
    }
    if (j.contains("top_k")) config.top_k = j["top_k"].get<int>();
    if (j.contains("rewrite")) {
        const auto& w = j["rewrite"];
        reject_unknown_keys(w, {"enabled", "rewriter", "stoplist", "template_path", "model",
                                "url"},
                            "rewrite");
        if (w.contains("enabled")) config.rewrite.enabled = w["enabled"].get<bool>();
        if (w.contains("rewriter")) config.rewrite.rewriter = w["rewriter"].get<std::string>();
        if (w.contains("stoplist"))
            config.rewrite.stoplist = w["stoplist"].get<std::vector<std::string>>();
        if (w.contains("template_path"))
            config.rewrite.template_path = w["template_path"].get<std::string>();
        if (w.contains("model")) config.rewrite.model = w["model"].get<std::string>();
        if (w.contains("url")) config.rewrite.url = w["url"].get<std::string>();
    }
    if (j.contains("rerank")) {
        const auto& rr = j["rerank"];
        reject_unknown_keys(rr, {"enabled", "reranker", "model", "url", "fallback_first_stage",
                                 "use_original_query"},
                            "rerank");
        if (rr.contains("enabled")) config.rerank.enabled = rr["enabled"].get<bool>();
        if (rr.contains("reranker")) config.rerank.reranker = rr["reranker"].get<std::string>();
        if (rr.contains("model")) config.rerank.model = rr["model"].get<std::string>();
        if (rr.contains("url")) config.rerank.url = rr["url"].get<std::string>();
        if (rr.contains("fallback_first_stage"))
            config.rerank.fallback_first_stage = rr["fallback_first_stage"].get<bool>();
        if (rr.contains("use_original_query"))
            config.rerank.use_original_query = rr["use_original_query"].get<bool>();
    }
    if (j.contains("final_k")) config.final_k = j["final_k"].get<int>();
    validate_search_config(config);
    return config;
}

OrderedJson search_config_to_json(const SearchConfig& config) {
    OrderedJson j;
    j["data_level"] = to_string(config.data_level);
    j["category_level"] = config.category_level;
    OrderedJson r;
    if (config.retriever.kind == RetrieverConfig::Kind::dense) {
        r["kind"] = "dense";
        r["provider"] = config.retriever.dense.provider;
        r["dimension"] = config.retriever.dense.dimension;
        if (!config.retriever.dense.synonyms_path.empty())
            r["synonyms"] = config.retriever.dense.synonyms_path;
        if (!config.retriever.dense.model.empty()) r["model"] = config.retriever.dense.model;
        if (!config.retriever.dense.query_instruction.empty())
            r["query_instruction"] = config.retriever.dense.query_instruction;
        if (!config.retriever.dense.document_instruction.empty())
            r["document_instruction"] = config.retriever.dense.document_instruction;
    } else {
        r["kind"] = "bm25";
        r["k1"] = config.retriever.bm25.k1;
        r["b"] = config.retriever.bm25.b;
        r["query_term_set_semantics"] = config.retriever.bm25.query_term_set_semantics;
    }
    j["retriever"] = std::move(r);
    j["top_k"] = config.top_k;
    OrderedJson w;
    w["enabled"] = config.rewrite.enabled;
    w["rewriter"] = config.rewrite.rewriter;
    if (!config.rewrite.stoplist.empty()) w["stoplist"] = config.rewrite.stoplist;
    if (!config.rewrite.template_path.empty()) w["template_path"] = config.rewrite.template_path;
    if (!config.rewrite.model.empty()) w["model"] = config.rewrite.model;
    j["rewrite"] = std::move(w);
    OrderedJson rr;
    rr["enabled"] = config.rerank.enabled;
    rr["reranker"] = config.rerank.reranker;
    if (!config.rerank.model.empty()) rr["model"] = config.rerank.model;
    if (config.rerank.fallback_first_stage) rr["fallback_first_stage"] = true;
    if (config.rerank.use_original_query) rr["use_original_query"] = true;
    j["rerank"] = std::move(rr);
    j["final_k"] = config.final_k;
    return j;
}

SearchConfig load_search_config(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw DataError("malformed config JSON in " + path + ": " + e.what());
    }
    return search_config_from_json(j);
}

void validate_search_config(const SearchConfig& config) {
    validate_category_level(config.category_level);
    if (config.top_k < 1) throw DataError("top_k must be >= 1");
    if (config.final_k < 1) throw DataError("final_k must be >= 1");
    if (config.final_k > config.top_k)
        throw DataError("final_k (" + std::to_string(config.final_k) +
                        ") must not exceed top_k (" + std::to_string(config.top_k) + ")");
    if (config.retriever.kind == RetrieverConfig::Kind::dense) {
        const auto& d = config.retriever.dense;
        if (d.provider != "hashing" && d.provider != "remote")
            throw DataError("unknown embedding provider '" + d.provider + "'");
        if (d.provider == "remote" && d.model.empty())
            throw DataError("remote embedding provider requires a model name");
    } else {
        if (config.retriever.bm25.k1 < 0.0) throw DataError("BM25 k1 must be >= 0");
        if (config.retriever.bm25.b < 0.0 || config.retriever.bm25.b > 1.0)
            throw DataError("BM25 b must be in [0,1]");
    }
    if (config.rewrite.rewriter != "passthrough" && config.rewrite.rewriter != "rules" &&
        config.rewrite.rewriter != "remote")
        throw DataError("unknown rewriter '" + config.rewrite.rewriter + "'");
    if (config.rerank.reranker != "overlap" && config.rerank.reranker != "remote")
        throw DataError("unknown reranker '" + config.rerank.reranker + "'");
}

OrderedJson outcome_to_json(const SearchOutcome& outcome, const Catalog* catalog) {
    OrderedJson j;
    j["query_id"] = outcome.query_id;
    j["config_fingerprint"] = outcome.config_fingerprint;
    j["rewritten_query"] = outcome.rewritten_query;
    OrderedJson results = OrderedJson::array();
    int rank = 1;
    for (const auto& item : outcome.results) {
        OrderedJson entry;
        entry["rank"] = rank++;
        entry["article_number"] = item.doc_id;
        if (catalog) {
            if (const Product* p = catalog->find(item.doc_id)) entry["name"] = p->name;
        }
        entry["score"] = item.score;
        results.push_back(std::move(entry));
    }
    j["results"] = std::move(results);
    OrderedJson t;
    t["rewrite_ms"] = outcome.timings.rewrite_ms;
    t["embed_ms"] = outcome.timings.embed_ms;
    t["retrieve_ms"] = outcome.timings.retrieve_ms;
    t["rerank_ms"] = outcome.timings.rerank_ms;
    t["total_ms"] = outcome.timings.total_ms;
    j["timings"] = std::move(t);
    OrderedJson degraded;
    degraded["rewrite"] = outcome.rewrite_degraded;
    degraded["rerank"] = outcome.rerank_degraded;
    j["degraded"] = std::move(degraded);
    j["rerank_scored"] = outcome.rerank_scored;
    return j;
}

std::shared_ptr<EmbeddingProvider> StageFactory::make_embedder(
    const DenseRetrieverConfig& config) {
    if (config.provider == "hashing") {
        std::map<std::string, std::string> synonyms;
        if (!config.synonyms_path.empty()) synonyms = load_synonyms(config.synonyms_path);
        return std::make_shared<HashingProvider>(config.dimension, std::move(synonyms));
    }
    if (config.provider == "remote") {
        RemoteEndpoint endpoint;
        endpoint.url = require_url(config.url, "EMBED_URL", "embedding");
        endpoint.model = config.model;
        endpoint.api_key = env_or("API_KEY", "");
        return std::make_shared<RemoteEmbeddingProvider>(
            std::move(endpoint), config.dimension, config.batch_size, config.parallelism,
            config.query_instruction, config.document_instruction);
    }
    throw UsageError("unknown embedding provider '" + config.provider + "'");
}

std::shared_ptr<Reranker> StageFactory::make_reranker(const RerankStageConfig& config) {
    if (config.reranker == "overlap") return std::make_shared<OverlapReranker>();
    if (config.reranker == "remote") {
        RemoteEndpoint endpoint;
        endpoint.url = require_url(config.url, "RERANK_URL", "rerank");
        endpoint.model = config.model;
        endpoint.api_key = env_or("API_KEY", "");
        return std::make_shared<RemoteReranker>(std::move(endpoint));
    }
    throw UsageError("unknown reranker '" + config.reranker + "'");
}

std::shared_ptr<QueryRewriter> StageFactory::make_rewriter(const RewriteStageConfig& config) {
    if (config.rewriter == "passthrough") return std::make_shared<PassthroughRewriter>();
    if (config.rewriter == "rules") {
        if (config.stoplist.empty()) return std::make_shared<RulesRewriter>();
        return std::make_shared<RulesRewriter>(
            std::set<std::string>(config.stoplist.begin(), config.stoplist.end()));
    }
    if (config.rewriter == "remote") {
        RemoteEndpoint endpoint;
        endpoint.url = require_url(config.url, "REWRITE_URL", "rewrite");
        endpoint.model = config.model;
        endpoint.api_key = env_or("API_KEY", "");
        std::string prompt = config.template_path.empty()
                                 ? RemoteRewriter::default_system_prompt()
                                 : read_file(config.template_path);
        return std::make_shared<RemoteRewriter>(std::move(endpoint), std::move(prompt));
    }
    throw UsageError("unknown rewriter '" + config.rewriter + "'");
}

void IndexSet::insert(PreparedIndex index) {
    std::string key = index.key;
    by_key_.insert_or_assign(std::move(key), std::move(index));
}

const PreparedIndex* IndexSet::find(const SearchConfig& config) const {
    auto it = by_key_.find(index_key(config));
    return it == by_key_.end() ? nullptr : &it->second;
}

const PreparedIndex& IndexSet::require(const SearchConfig& config) const {
    const PreparedIndex* index = find(config);
    if (!index)
        throw DataError("no prepared index for key '" + index_key(config) +
                        "'; run prepare/index first");
    return *index;
}

std::string index_key(const SearchConfig& config) {
    return retriever_descriptor(config).dump();
}

std::string config_fingerprint(const SearchConfig& config, const PreparedIndex& index) {
    std::string material = search_config_to_json(config).dump();
    material += '|';
    material += index.fingerprint;
    return to_hex16(fnv1a64(material));
}

IndexSet prepare_indices(const Catalog& catalog, const Taxonomy& taxonomy,
                         const std::vector<SearchConfig>& configs,
                         const std::filesystem::path& cache_dir, StageFactory& factory) {
    IndexSet set;
    // Single writer per fingerprint: one pass over distinct keys.
    std::map<std::string, const SearchConfig*> distinct;
    for (const auto& config : configs) {
        validate_search_config(config);
        distinct.emplace(index_key(config), &config);
    }

    if (!cache_dir.empty()) std::filesystem::create_directories(cache_dir);

    for (const auto& [key, config] : distinct) {
        auto docs = compose_all(catalog, taxonomy, config->data_level, config->category_level);
        const std::uint64_t chash = corpus_hash(docs);

        PreparedIndex prepared;
        prepared.key = key;
        prepared.fingerprint = to_hex16(fnv1a64(key + "|" + to_hex16(chash)));
        for (const auto& doc : docs) prepared.doc_texts.emplace(doc.product_id, doc.text);

        const bool is_dense = config->retriever.kind == RetrieverConfig::Kind::dense;
        std::filesystem::path cache_file;
        if (!cache_dir.empty())
            cache_file = cache_dir / (prepared.fingerprint + (is_dense ? ".vidx" : ".bidx"));

        if (!cache_file.empty() && std::filesystem::exists(cache_file)) {
            if (is_dense) {
                auto index = VectorIndex::load(cache_file.string());
                if (index.stamp().corpus_hash != chash ||
                    index.stamp().data_level != config->data_level ||
                    index.stamp().category_level != config->category_level)
                    throw DataError("cached index stamp mismatch: " + cache_file.string());
                prepared.dense = std::move(index);
            } else {
                prepared.bm25 = Bm25Index::load(cache_file.string());
            }
            prepared.cache_hit = true;
        } else {
            if (is_dense) {
                auto provider = factory.make_embedder(config->retriever.dense);
                prepared.dense = VectorIndex::build(docs, *provider, chash);
                if (!cache_file.empty()) prepared.dense->save(cache_file.string());
            } else {
                prepared.bm25 = Bm25Index::build(docs, config->retriever.bm25);
                if (!cache_file.empty()) prepared.bm25->save(cache_file.string());
            }
        }
        set.insert(std::move(prepared));
    }
    return set;
}

SearchEngine::SearchEngine(std::shared_ptr<const Catalog> catalog,
                           std::shared_ptr<const Taxonomy> taxonomy, IndexSet indices,
                           std::shared_ptr<StageFactory> factory)
    : catalog_(std::move(catalog)),
      taxonomy_(std::move(taxonomy)),
      indices_(std::move(indices)),
      factory_(factory ? std::move(factory) : std::make_shared<StageFactory>()) {}

std::shared_ptr<EmbeddingProvider> SearchEngine::embedder_for(
    const DenseRetrieverConfig& config) {
    OrderedJson key;
    key["provider"] = config.provider;
    key["dimension"] = config.dimension;
    key["synonyms"] = config.synonyms_path;
    key["model"] = config.model;
    key["url"] = config.url;
    key["qi"] = config.query_instruction;
    key["di"] = config.document_instruction;
    std::lock_guard lock(cache_mutex_);
    auto& slot = embedder_cache_[key.dump()];
    if (!slot) slot = factory_->make_embedder(config);
    return slot;
}

std::shared_ptr<Reranker> SearchEngine::reranker_for(const RerankStageConfig& config) {
    std::string key = config.reranker + "|" + config.model + "|" + config.url;
    std::lock_guard lock(cache_mutex_);
    auto& slot = reranker_cache_[key];
    if (!slot) slot = factory_->make_reranker(config);
    return slot;
}

std::shared_ptr<QueryRewriter> SearchEngine::rewriter_for(const RewriteStageConfig& config) {
    OrderedJson key;
    key["rewriter"] = config.rewriter;
    key["stoplist"] = config.stoplist;
    key["template_path"] = config.template_path;
    key["model"] = config.model;
    key["url"] = config.url;
    std::lock_guard lock(cache_mutex_);
    auto& slot = rewriter_cache_[key.dump()];
    if (!slot) slot = factory_->make_rewriter(config);
    return slot;
}

SearchOutcome SearchEngine::run_search(const SearchConfig& config, const std::string& query,
                                       const std::string& query_id) {
    validate_search_config(config);
    if (query.find_first_not_of(" \t\r\n") == std::string::npos)
        throw UsageError("query must not be blank");
    const PreparedIndex& index = indices_.require(config);

    SearchOutcome outcome;
    outcome.query_id = query_id.empty() ? "q-" + to_hex16(fnv1a64(query)).substr(8) : query_id;
    outcome.config_fingerprint = config_fingerprint(config, index);

    const auto start = Clock::now();

    std::string effective = query;
    if (config.rewrite.enabled) {
        const auto stage = Clock::now();
        auto rewriter = rewriter_for(config.rewrite);
        auto rewritten = rewrite_query(*rewriter, query, /*fallback_on_error=*/true);
        effective = rewritten.query;
        outcome.rewrite_degraded = rewritten.degraded;
        outcome.timings.rewrite_ms = ms_since(stage);
    }
    outcome.rewritten_query = effective;

    std::vector<ScoredDoc> candidates;
    if (config.retriever.kind == RetrieverConfig::Kind::dense) {
        auto provider = embedder_for(config.retriever.dense);
        const auto embed_stage = Clock::now();
        auto vectors = embed_texts(*provider, {effective}, InputRole::query);
        outcome.timings.embed_ms = ms_since(embed_stage);

        const auto retrieve_stage = Clock::now();
        candidates = index.dense->search(vectors.front(), config.top_k, provider->name());
        outcome.timings.retrieve_ms = ms_since(retrieve_stage);
    } else {
        const auto retrieve_stage = Clock::now();
        candidates = index.bm25->search(effective, config.top_k);
        outcome.timings.retrieve_ms = ms_since(retrieve_stage);
    }

    if (config.rerank.enabled && !candidates.empty()) {
        const auto rerank_stage = Clock::now();
        auto reranker = reranker_for(config.rerank);
        const std::string& rerank_query = config.rerank.use_original_query ? query : effective;
        auto lookup = [&index](const std::string& doc_id) -> const std::string* {
            auto it = index.doc_texts.find(doc_id);
            return it == index.doc_texts.end() ? nullptr : &it->second;
        };
        auto reranked = rerank(*reranker, rerank_query, candidates, lookup,
                               config.rerank.fallback_first_stage);
        outcome.rerank_scored = static_cast<int>(candidates.size());
        outcome.rerank_degraded = reranked.degraded;
        candidates = std::move(reranked.items);
        outcome.timings.rerank_ms = ms_since(rerank_stage);
    }

    if (candidates.size() > static_cast<std::size_t>(config.final_k))
        candidates.resize(static_cast<std::size_t>(config.final_k));
    outcome.results = std::move(candidates);
    outcome.timings.total_ms = ms_since(start);
    return outcome;
}

} // namespace taxsearch
