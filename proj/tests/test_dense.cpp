#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "taxsearch/dense.hpp"
#include "test_util.hpp"

using namespace taxsearch;

namespace {

ComposedDocument doc(std::string id, std::string text) {
    ComposedDocument d;
    d.product_id = std::move(id);
    d.text = std::move(text);
    return d;
}

EmbeddingVector random_vector(std::mt19937& rng, int d) {
    std::normal_distribution<float> dist(0.0f, 1.0f);
    EmbeddingVector v(static_cast<std::size_t>(d));
    for (auto& x : v) x = dist(rng);
    return v;
}

// Full sort over every stored row using the public cosine routine.
std::vector<ScoredDoc> brute_force(const VectorIndex& index, const EmbeddingVector& query,
                                   int top_k) {
    std::vector<ScoredDoc> scored;
    for (std::size_t i = 0; i < index.size(); ++i)
        scored.push_back({index.doc_ids()[i], cosine(index.row(i), query)});
    std::sort(scored.begin(), scored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (scored.size() > static_cast<std::size_t>(top_k))
        scored.resize(static_cast<std::size_t>(top_k));
    return scored;
}

} // namespace

TEST_CASE("cosine on the analytic examples") {
    EmbeddingVector e1 = {1.0f, 0.0f};
    EmbeddingVector e2 = {0.0f, 1.0f};
    EmbeddingVector diag = {1.0f, 1.0f};
    CHECK(cosine(e1, e1) == doctest::Approx(1.0));
    CHECK(cosine(e1, e2) == doctest::Approx(0.0));
    CHECK(cosine(diag, e1) == doctest::Approx(0.70710678).epsilon(1e-8));
}

TEST_CASE("cosine rejects mismatched dimensions and zero vectors") {
    EmbeddingVector a = {1.0f, 0.0f};
    EmbeddingVector b = {1.0f, 0.0f, 0.0f};
    EmbeddingVector zero = {0.0f, 0.0f};
    CHECK_THROWS_AS(cosine(a, b), DataError);
    CHECK_THROWS_AS(cosine(a, zero), DataError);
}

TEST_CASE("cosine symmetry and scale invariance") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto u = random_vector(rng, 32);
        auto v = random_vector(rng, 32);
        CHECK(std::abs(cosine(u, v) - cosine(v, u)) < 1e-12);

        EmbeddingVector scaled = u;
        const float alpha = 3.75f;
        for (auto& x : scaled) x *= alpha;
        CHECK(std::abs(cosine(scaled, v) - cosine(u, v)) < 1e-9);
    }
}

TEST_CASE("hashing embedder is deterministic and order-insensitive") {
    auto a = hashing_embed("knx terminal", 64);
    auto b = hashing_embed("knx terminal", 64);
    auto c = hashing_embed("terminal knx", 64);
    CHECK(a == b);
    CHECK(a == c);
}

TEST_CASE("hashing embedder is scale-invariant over repeats") {
    CHECK(hashing_embed("a a", 64) == hashing_embed("a", 64));
}

TEST_CASE("synonym routing embeds aliases onto their canonical tokens") {
    std::map<std::string, std::string> synonyms{{"snap", "push"}};
    CHECK(hashing_embed("snap in", 64, synonyms) == hashing_embed("push in", 64, synonyms));
    CHECK(hashing_embed("snap in", 64, synonyms) == hashing_embed("push in", 64));
}

TEST_CASE("disjoint-token texts stay nearly orthogonal at large d") {
    static const char* words[] = {"alpha", "bravo", "carbon", "delta", "ember",  "falcon",
                                  "gamma", "hotel", "indigo", "joule", "karat",  "lumen",
                                  "month", "noble", "oxide",  "prism", "quartz", "rover"};
    int below = 0;
    for (unsigned seed = 0; seed < 100; ++seed) {
        std::mt19937 rng(seed);
        std::vector<std::string> pool(std::begin(words), std::end(words));
        std::shuffle(pool.begin(), pool.end(), rng);
        std::string left, right;
        for (int i = 0; i < 8; ++i) left += pool[static_cast<std::size_t>(i)] + " ";
        for (int i = 8; i < 16; ++i) right += pool[static_cast<std::size_t>(i)] + " ";
        auto u = hashing_embed(left, 1024);
        auto v = hashing_embed(right, 1024);
        if (std::abs(cosine(u, v)) < 0.3) ++below;
    }
    CHECK(below >= 95);
}

TEST_CASE("hashing embedder rejects tiny dimensions and empty token streams") {
    CHECK_THROWS_AS(hashing_embed("text", 4), UsageError);
    CHECK_THROWS_AS(hashing_embed("--- ***", 64), DataError);
}

TEST_CASE("embed_texts validates provider output") {
    HashingProvider provider(64);
    auto out = embed_texts(provider, {"knx", "terminal"});
    REQUIRE(out.size() == 2);
    CHECK(out[0].size() == 64);
}

TEST_CASE("build_vector_index produces normalized rows with provenance") {
    Taxonomy tax = testutil::fixture_taxonomy();
    Catalog catalog = testutil::fixture_catalog(tax);
    auto docs = compose_all(catalog, tax, DataLevel::basic, 1);
    HashingProvider provider(128);
    auto index = VectorIndex::build(docs, provider, 1234);

    REQUIRE(index.size() == 50);
    CHECK(index.stamp().provider_name == "hashing");
    CHECK(index.stamp().dimension == 128);
    CHECK(index.stamp().data_level == DataLevel::basic);
    CHECK(index.stamp().category_level == 1);
    for (std::size_t i = 0; i < index.size(); ++i)
        CHECK(std::abs(l2_norm(index.row(i)) - 1.0) < 1e-6);
}

TEST_CASE("empty index searches return nothing") {
    HashingProvider provider(64);
    auto index = VectorIndex::build({}, provider);
    EmbeddingVector q(64, 0.0f);
    q[0] = 1.0f;
    CHECK(index.search(q, 10).empty());
}

TEST_CASE("a document with no tokens is a hard error") {
    HashingProvider provider(64);
    CHECK_THROWS_AS(VectorIndex::build({doc("d1", "...")}, provider), DataError);
}

TEST_CASE("query equal to a stored row ranks first with score 1") {
    HashingProvider provider(64);
    auto index = VectorIndex::build({doc("d1", "knx terminal"), doc("d2", "relay module")},
                                    provider);
    auto q = hashing_embed("knx terminal", 64);
    auto hits = index.search(q, 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits.front().doc_id == "d1");
    CHECK(hits.front().score == doctest::Approx(1.0));
}

TEST_CASE("top_k larger than the corpus returns the whole corpus ranked") {
    HashingProvider provider(64);
    auto index = VectorIndex::build({doc("d1", "aaa"), doc("d2", "bbb"), doc("d3", "ccc")},
                                    provider);
    auto hits = index.search(hashing_embed("aaa", 64), 50);
    CHECK(hits.size() == 3);
    CHECK(hits.front().doc_id == "d1");
}

TEST_CASE("dense_search equals brute force on random vectors") {
    std::mt19937 rng(2024);
    const int d = 64;
    std::vector<ComposedDocument> docs;
    std::vector<EmbeddingVector> vectors;
    for (int i = 0; i < 300; ++i) {
        docs.push_back(doc("d" + std::to_string(1000 + i), "placeholder"));
        vectors.push_back(random_vector(rng, d));
    }

    // Inject the random vectors through a stub provider.
    struct StubProvider : EmbeddingProvider {
        std::vector<EmbeddingVector>* vectors;
        std::string stub_name = "stub";
        const std::string& name() const override { return stub_name; }
        int dimension() const override { return 64; }
        ProviderKind kind() const override { return ProviderKind::hashing_offline; }
        std::vector<EmbeddingVector> embed(const std::vector<std::string>&, InputRole) override {
            return *vectors;
        }
    } provider;
    provider.vectors = &vectors;

    auto index = VectorIndex::build(docs, provider);
    for (int trial = 0; trial < 10; ++trial) {
        auto q = random_vector(rng, d);
        auto got = index.search(q, 20);
        auto expected = brute_force(index, q, 20);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].doc_id == expected[i].doc_id);
            CHECK(got[i].score == doctest::Approx(expected[i].score).epsilon(1e-12));
        }
    }
}

TEST_CASE("provenance and dimension guards reject foreign queries") {
    HashingProvider provider(64);
    auto index = VectorIndex::build({doc("d1", "knx")}, provider);
    auto q = hashing_embed("knx", 64);
    CHECK_THROWS_AS(index.search(q, 5, "remote:other-model"), DataError);
    CHECK_THROWS_AS(index.search(hashing_embed("knx", 32), 5), DataError);
    CHECK_FALSE(index.search(q, 5, "hashing").empty());
}

TEST_CASE("vector index persists byte-identically and validates on load") {
    Taxonomy tax = testutil::fixture_taxonomy();
    Catalog catalog = testutil::fixture_catalog(tax);
    auto docs = compose_all(catalog, tax, DataLevel::minimal, 0);
    HashingProvider provider(64);
    auto index = VectorIndex::build(docs, provider, 777);

    namespace fs = std::filesystem;
    auto path_a = (fs::temp_directory_path() / "taxsearch_vidx_a.vidx").string();
    auto path_b = (fs::temp_directory_path() / "taxsearch_vidx_b.vidx").string();
    index.save(path_a);
    VectorIndex::build(docs, provider, 777).save(path_b);
    CHECK(testutil::slurp(path_a) == testutil::slurp(path_b));

    auto loaded = VectorIndex::load(path_a);
    CHECK(loaded.stamp().corpus_hash == 777);
    CHECK(loaded.size() == index.size());
    auto q = hashing_embed("measuring transformer disconnect", 64);
    auto a = index.search(q, 5);
    auto b = loaded.search(q, 5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].doc_id == b[i].doc_id);
        CHECK(a[i].score == b[i].score);
    }
    fs::remove(path_a);
    fs::remove(path_b);

    auto bogus = (fs::temp_directory_path() / "taxsearch_bogus.vidx").string();
    write_file(bogus, "junk");
    CHECK_THROWS_AS(VectorIndex::load(bogus), DataError);
    fs::remove(bogus);
}
