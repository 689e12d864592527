#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <filesystem>

#include "taxsearch/pipeline.hpp"
#include "test_util.hpp"

using namespace taxsearch;
namespace fs = std::filesystem;

namespace {

// Counts provider constructions and embed calls for cache assertions.
class CountingProvider : public EmbeddingProvider {
public:
    CountingProvider(int dimension, std::atomic<int>& embed_calls)
        : inner_(dimension), embed_calls_(embed_calls) {}
    const std::string& name() const override { return inner_.name(); }
    int dimension() const override { return inner_.dimension(); }
    ProviderKind kind() const override { return inner_.kind(); }
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                       InputRole role) override {
        ++embed_calls_;
        return inner_.embed(texts, role);
    }

private:
    HashingProvider inner_;
    std::atomic<int>& embed_calls_;
};

class SpyFactory : public StageFactory {
public:
    std::shared_ptr<EmbeddingProvider> make_embedder(const DenseRetrieverConfig& c) override {
        ++embedders_made;
        return std::make_shared<CountingProvider>(c.dimension, embed_calls);
    }
    std::atomic<int> embedders_made{0};
    std::atomic<int> embed_calls{0};
};

SearchConfig hashing_config(int category_level = 1, int top_k = 20, int final_k = 10) {
    SearchConfig config;
    config.data_level = DataLevel::basic;
    config.category_level = category_level;
    config.retriever.kind = RetrieverConfig::Kind::dense;
    config.retriever.dense.provider = "hashing";
    config.retriever.dense.dimension = 256;
    config.top_k = top_k;
    config.final_k = final_k;
    config.rerank.enabled = true;
    config.rerank.reranker = "overlap";
    return config;
}

struct EngineFixture {
    std::shared_ptr<const Taxonomy> taxonomy;
    std::shared_ptr<const Catalog> catalog;
    std::shared_ptr<StageFactory> factory;
    std::shared_ptr<SearchEngine> engine;

    explicit EngineFixture(const std::vector<SearchConfig>& configs,
                           std::shared_ptr<StageFactory> custom_factory = nullptr,
                           const fs::path& cache_dir = {}) {
        taxonomy = std::make_shared<Taxonomy>(testutil::fixture_taxonomy());
        catalog = std::make_shared<Catalog>(testutil::fixture_catalog(*taxonomy));
        factory = custom_factory ? std::move(custom_factory) : std::make_shared<StageFactory>();
        IndexSet indices = prepare_indices(*catalog, *taxonomy, configs, cache_dir, *factory);
        engine = std::make_shared<SearchEngine>(catalog, taxonomy, std::move(indices), factory);
    }
};

} // namespace

TEST_CASE("config JSON round-trips with the documented field names") {
    std::string text = testutil::slurp(testutil::data_path("config_hashing.json"));
    SearchConfig config = search_config_from_json(Json::parse(text));
    CHECK(config.data_level == DataLevel::basic);
    CHECK(config.category_level == 1);
    CHECK(config.retriever.kind == RetrieverConfig::Kind::dense);
    CHECK(config.retriever.dense.dimension == 256);
    CHECK(config.top_k == 20);
    CHECK(config.rerank.enabled);
    CHECK(config.final_k == 10);

    auto j = search_config_to_json(config);
    SearchConfig again = search_config_from_json(Json::parse(j.dump()));
    CHECK(search_config_to_json(again).dump() == j.dump());
}

TEST_CASE("config validation rejects out-of-contract values") {
    SearchConfig config = hashing_config();
    config.final_k = 50;
    config.top_k = 20;
    CHECK_THROWS_AS(validate_search_config(config), DataError);

    config = hashing_config();
    config.category_level = 5;
    CHECK_THROWS_AS(validate_search_config(config), DataError);

    config = hashing_config();
    config.top_k = 0;
    CHECK_THROWS_AS(validate_search_config(config), DataError);

    Json with_unknown = Json::parse(R"({"data_level":"basic","unknown_knob":1})");
    CHECK_THROWS_AS(search_config_from_json(with_unknown), DataError);
}

TEST_CASE("configs differing only in top_k share one index") {
    auto factory = std::make_shared<SpyFactory>();
    EngineFixture fx({hashing_config(1, 20, 10), hashing_config(1, 50, 10)}, factory);
    CHECK(fx.engine->indices().size() == 1);
    CHECK(factory->embedders_made.load() == 1);
}

TEST_CASE("CL0..CL4 at a fixed data level need five indices") {
    std::vector<SearchConfig> grid;
    for (int cl = 0; cl <= 4; ++cl) grid.push_back(hashing_config(cl));
    EngineFixture fx(grid);
    CHECK(fx.engine->indices().size() == 5);
}

TEST_CASE("rebuilding from an unchanged store is a cache hit with zero embed calls") {
    auto tmp = fs::temp_directory_path() / "taxsearch_cache_test";
    fs::remove_all(tmp);

    auto factory_a = std::make_shared<SpyFactory>();
    EngineFixture first({hashing_config()}, factory_a, tmp);
    CHECK(factory_a->embed_calls.load() == 1); // one batched embed per index build
    CHECK_FALSE(first.engine->indices().entries().begin()->second.cache_hit);

    auto factory_b = std::make_shared<SpyFactory>();
    EngineFixture second({hashing_config()}, factory_b, tmp);
    CHECK(factory_b->embed_calls.load() == 0);
    CHECK(second.engine->indices().entries().begin()->second.cache_hit);

    // identical search results through the cached index
    auto a = first.engine->run_search(hashing_config(), "measuring transformer disconnect");
    auto b = second.engine->run_search(hashing_config(), "measuring transformer disconnect");
    REQUIRE(a.results.size() == b.results.size());
    for (std::size_t i = 0; i < a.results.size(); ++i) {
        CHECK(a.results[i].doc_id == b.results[i].doc_id);
        CHECK(a.results[i].score == b.results[i].score);
    }
    fs::remove_all(tmp);
}

TEST_CASE("run_search with rerank off returns retrieval order truncated to final_k") {
    SearchConfig config = hashing_config();
    config.rerank.enabled = false;
    config.final_k = 5;
    EngineFixture fx({config});

    auto outcome = fx.engine->run_search(config, "measuring transformer disconnect terminal");
    REQUIRE(outcome.results.size() == 5);
    CHECK(outcome.rerank_scored == 0);
    CHECK(outcome.timings.rerank_ms == 0.0);

    // oracle: direct index search
    const PreparedIndex& prepared = fx.engine->indices().require(config);
    auto q = hashing_embed("measuring transformer disconnect terminal", 256);
    auto direct = prepared.dense->search(q, config.top_k);
    for (std::size_t i = 0; i < outcome.results.size(); ++i)
        CHECK(outcome.results[i].doc_id == direct[i].doc_id);
}

TEST_CASE("rewrite off is byte-equivalent to the passthrough rewriter") {
    SearchConfig off = hashing_config();
    off.rewrite.enabled = false;
    SearchConfig pass = hashing_config();
    pass.rewrite.enabled = true;
    pass.rewrite.rewriter = "passthrough";
    EngineFixture fx({off, pass});

    auto a = fx.engine->run_search(off, "blue feed-through terminals", "q1");
    auto b = fx.engine->run_search(pass, "blue feed-through terminals", "q1");
    // timings and fingerprints differ; ranked ids, scores and the rewritten
    // query must be identical
    CHECK(a.rewritten_query == b.rewritten_query);
    REQUIRE(a.results.size() == b.results.size());
    for (std::size_t i = 0; i < a.results.size(); ++i) {
        CHECK(a.results[i].doc_id == b.results[i].doc_id);
        CHECK(a.results[i].score == b.results[i].score);
    }
}

TEST_CASE("dense + overlap rerank equals the hand-composed stage sequence") {
    SearchConfig config = hashing_config(1, 20, 5);
    EngineFixture fx({config});
    const std::string query = "measuring transformer disconnect screw";

    auto outcome = fx.engine->run_search(config, query);

    // oracle: compose the stages by hand
    const PreparedIndex& prepared = fx.engine->indices().require(config);
    auto qvec = hashing_embed(query, 256);
    auto stage1 = prepared.dense->search(qvec, 20);
    OverlapReranker reranker;
    auto lookup = [&prepared](const std::string& id) -> const std::string* {
        auto it = prepared.doc_texts.find(id);
        return it == prepared.doc_texts.end() ? nullptr : &it->second;
    };
    auto stage2 = rerank(reranker, query, stage1, lookup);
    stage2.items.resize(5);

    REQUIRE(outcome.results.size() == stage2.items.size());
    for (std::size_t i = 0; i < stage2.items.size(); ++i) {
        CHECK(outcome.results[i].doc_id == stage2.items[i].doc_id);
        CHECK(outcome.results[i].score == stage2.items[i].score);
    }
    CHECK(outcome.rerank_scored == 20);
}

TEST_CASE("returned ids are always contained in the retrieval top_k") {
    SearchConfig config = hashing_config(1, 15, 7);
    EngineFixture fx({config});
    const std::string query = "relay module with led";

    auto outcome = fx.engine->run_search(config, query);
    const PreparedIndex& prepared = fx.engine->indices().require(config);
    auto stage1 = prepared.dense->search(hashing_embed(query, 256), 15);
    std::set<std::string> allowed;
    for (const auto& c : stage1) allowed.insert(c.doc_id);
    CHECK(outcome.results.size() <= 7);
    for (const auto& r : outcome.results) CHECK(allowed.count(r.doc_id) == 1);
}

TEST_CASE("identical config and query give identical outcomes") {
    SearchConfig config = hashing_config();
    EngineFixture fx({config});
    auto a = fx.engine->run_search(config, "feed-through terminal block", "qx");
    auto b = fx.engine->run_search(config, "feed-through terminal block", "qx");
    CHECK(a.config_fingerprint == b.config_fingerprint);
    REQUIRE(a.results.size() == b.results.size());
    for (std::size_t i = 0; i < a.results.size(); ++i) {
        CHECK(a.results[i].doc_id == b.results[i].doc_id);
        CHECK(a.results[i].score == b.results[i].score);
    }
}

TEST_CASE("timings: disabled stages report zero, total covers each stage") {
    SearchConfig config = hashing_config();
    config.rewrite.enabled = false;
    EngineFixture fx({config});
    auto outcome = fx.engine->run_search(config, "interface relay 24");
    CHECK(outcome.timings.rewrite_ms == 0.0);
    CHECK(outcome.timings.embed_ms >= 0.0);
    CHECK(outcome.timings.total_ms >= outcome.timings.embed_ms);
    CHECK(outcome.timings.total_ms >= outcome.timings.retrieve_ms);
    CHECK(outcome.timings.total_ms >= outcome.timings.rerank_ms);
}

TEST_CASE("bm25 retriever path works end to end") {
    SearchConfig config;
    config.data_level = DataLevel::advanced;
    config.category_level = 0;
    config.retriever.kind = RetrieverConfig::Kind::bm25;
    config.top_k = 10;
    config.final_k = 5;
    EngineFixture fx({config});
    auto outcome = fx.engine->run_search(config, "interface relay coil");
    CHECK_FALSE(outcome.results.empty());
    CHECK(outcome.timings.embed_ms == 0.0);
    const Product* top = fx.catalog->find(outcome.results.front().doc_id);
    REQUIRE(top != nullptr);
    CHECK(top->commodity_class_id == "27-37-09-01");
}

TEST_CASE("blank queries and missing indices are rejected") {
    SearchConfig config = hashing_config();
    EngineFixture fx({config});
    CHECK_THROWS_AS(fx.engine->run_search(config, "   "), UsageError);

    SearchConfig other = hashing_config(3);
    CHECK_THROWS_AS(fx.engine->run_search(other, "query"), DataError);
}

TEST_CASE("fingerprints are stable for equal configs and differ across levels") {
    SearchConfig a = hashing_config(1);
    SearchConfig b = hashing_config(1);
    SearchConfig c = hashing_config(2);
    EngineFixture fx({a, c});
    const PreparedIndex& ia = fx.engine->indices().require(a);
    const PreparedIndex& ic = fx.engine->indices().require(c);
    CHECK(config_fingerprint(a, ia) == config_fingerprint(b, ia));
    CHECK(config_fingerprint(a, ia) != config_fingerprint(c, ic));
    CHECK(config_fingerprint(a, ia).size() == 16);
}

TEST_CASE("outcome JSON carries results, timings and degraded flags") {
    SearchConfig config = hashing_config();
    EngineFixture fx({config});
    auto outcome = fx.engine->run_search(config, "measuring transformer disconnect", "q9");
    auto j = outcome_to_json(outcome, fx.catalog.get());
    CHECK(j["query_id"] == "q9");
    CHECK(j["results"].is_array());
    REQUIRE(!j["results"].empty());
    CHECK(j["results"][0].contains("article_number"));
    CHECK(j["results"][0].contains("name"));
    CHECK(j["results"][0]["rank"] == 1);
    CHECK(j["timings"].contains("total_ms"));
    CHECK(j["degraded"]["rerank"] == false);
    CHECK(j["rerank_scored"].get<int>() == 20);
}
