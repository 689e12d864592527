#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>

#include "taxsearch/catalog.hpp"
#include "test_util.hpp"

using namespace taxsearch;
using testutil::data_path;

namespace {

std::string chain_taxonomy_json() {
    return R"({"categories":[
        {"id":"27","level":1,"name":"Electrical"},
        {"id":"27-01","level":2,"name":"Connection","parent_id":"27"},
        {"id":"27-01-01","level":3,"name":"Terminals","parent_id":"27-01"},
        {"id":"27-01-01-01","level":4,"name":"Feed-through","parent_id":"27-01-01"}
    ]})";
}

Product sample_product() {
    Product p;
    p.article_number = "1001";
    p.name = "MTD 4";
    p.short_description = "Disconnect terminal";
    p.commodity_class_id = "27-01-01-01";
    p.attributes["width [mm]"] = 6.2;
    p.attributes["color"] = "gray";
    p.attributes["levels"] = 1;
    p.basic_attribute_names = {"color"};
    return p;
}

} // namespace

TEST_CASE("load_taxonomy accepts a minimal 4-node chain") {
    std::istringstream in(chain_taxonomy_json());
    Taxonomy tax = load_taxonomy(in);
    CHECK(tax.size() == 4);
    CHECK(tax.at("27-01-01-01").level == 4);
}

TEST_CASE("load_taxonomy rejects a dangling parent") {
    std::istringstream in(R"({"categories":[
        {"id":"27","level":1,"name":"Electrical"},
        {"id":"27-02-03","level":3,"name":"Orphan","parent_id":"27-02"}
    ]})");
    CHECK_THROWS_WITH_AS(load_taxonomy(in),
                         doctest::Contains("dangling parent '27-02' referenced by '27-02-03'"),
                         DataError);
}

TEST_CASE("load_taxonomy rejects duplicate ids") {
    std::istringstream in(R"({"categories":[
        {"id":"27","level":1,"name":"A"},
        {"id":"27","level":1,"name":"B"}
    ]})");
    CHECK_THROWS_WITH_AS(load_taxonomy(in), doctest::Contains("duplicate id '27'"), DataError);
}

TEST_CASE("load_taxonomy rejects level skips that would break the 4-node path") {
    std::istringstream in(R"({"categories":[
        {"id":"27","level":1,"name":"A"},
        {"id":"27-01-01","level":3,"name":"B","parent_id":"27"}
    ]})");
    CHECK_THROWS_WITH_AS(load_taxonomy(in), doctest::Contains("27-01-01"), DataError);
}

TEST_CASE("load_taxonomy rejects malformed JSON") {
    std::istringstream in("{nope");
    CHECK_THROWS_AS(load_taxonomy(in), DataError);
}

TEST_CASE("fixture taxonomy loads with the count from an independent JSON walk") {
    Taxonomy tax = testutil::fixture_taxonomy();

    // oracle: plain JSON walk, no taxonomy code involved
    Json raw = Json::parse(testutil::slurp(data_path("taxonomy_small.json")));
    std::size_t raw_count = raw["categories"].size();
    std::size_t raw_classes = 0;
    for (const auto& entry : raw["categories"])
        if (entry["level"].get<int>() == 4) ++raw_classes;

    CHECK(tax.size() == raw_count);
    CHECK(raw_count == 12);
    CHECK(raw_classes == 3);
}

TEST_CASE("load_products on an empty stream yields an empty list") {
    std::istringstream tax_in(chain_taxonomy_json());
    Taxonomy tax = load_taxonomy(tax_in);
    std::istringstream in("");
    CHECK(load_products(in, tax).empty());
}

TEST_CASE("load_products rejects a non-level-4 commodity class") {
    std::istringstream tax_in(chain_taxonomy_json());
    Taxonomy tax = load_taxonomy(tax_in);
    std::istringstream in(
        R"({"article_number":"1","name":"x","short_description":"y","commodity_class_id":"27-01-01"})"
        "\n");
    CHECK_THROWS_WITH_AS(load_products(in, tax), doctest::Contains("level 3"), DataError);
}

TEST_CASE("load_products rejects duplicates, bad basics and unknown classes") {
    std::istringstream tax_in(chain_taxonomy_json());
    Taxonomy tax = load_taxonomy(tax_in);

    SUBCASE("duplicate article number") {
        std::string line =
            R"({"article_number":"1","name":"x","short_description":"y","commodity_class_id":"27-01-01-01"})";
        std::istringstream in(line + "\n" + line + "\n");
        CHECK_THROWS_WITH_AS(load_products(in, tax), doctest::Contains("duplicate article_number"),
                             DataError);
    }
    SUBCASE("basic attribute not in attributes") {
        std::istringstream in(
            R"({"article_number":"1","name":"x","short_description":"y","commodity_class_id":"27-01-01-01","attributes":{"a":1},"basic_attribute_names":["b"]})"
            "\n");
        CHECK_THROWS_WITH_AS(load_products(in, tax), doctest::Contains("basic attribute 'b'"),
                             DataError);
    }
    SUBCASE("unknown commodity class") {
        std::istringstream in(
            R"({"article_number":"1","name":"x","short_description":"y","commodity_class_id":"99-99-99-99"})"
            "\n");
        CHECK_THROWS_WITH_AS(load_products(in, tax), doctest::Contains("unknown commodity class"),
                             DataError);
    }
    SUBCASE("malformed line reports its number") {
        std::istringstream in(
            R"({"article_number":"1","name":"x","short_description":"y","commodity_class_id":"27-01-01-01"})"
            "\n{broken\n");
        CHECK_THROWS_WITH_AS(load_products(in, tax), doctest::Contains("line 2"), DataError);
    }
}

TEST_CASE("fixture catalog: 50 products, grouped counts match an independent line scan") {
    Taxonomy tax = testutil::fixture_taxonomy();
    Catalog catalog = testutil::fixture_catalog(tax);

    // oracle: line-by-line scan of the raw file
    std::istringstream raw(testutil::slurp(data_path("catalog_small.jsonl")));
    std::string line;
    std::size_t lines = 0;
    std::map<std::string, std::size_t> per_class;
    while (std::getline(raw, line)) {
        if (line.empty()) continue;
        ++lines;
        ++per_class[Json::parse(line)["commodity_class_id"].get<std::string>()];
    }

    CHECK(catalog.size() == lines);
    CHECK(catalog.size() == 50);
    CHECK(catalog.distinct_class_count() == per_class.size());
    std::map<std::string, std::size_t> got;
    for (const auto& p : catalog.products()) ++got[p.commodity_class_id];
    CHECK(got == per_class);
}

TEST_CASE("category_path returns the chain for a 4-node taxonomy") {
    std::istringstream tax_in(chain_taxonomy_json());
    Taxonomy tax = load_taxonomy(tax_in);
    auto path = category_path(tax, "27-01-01-01");
    REQUIRE(path.size() == 4);
    CHECK(path[0]->level == 4);
    CHECK(path[1]->id == "27-01-01");
    CHECK(path[2]->id == "27-01");
    CHECK(path[3]->id == "27");
}

TEST_CASE("category_path on the fixture matches the published hierarchy names") {
    Taxonomy tax = testutil::fixture_taxonomy();
    auto path = category_path(tax, "27-25-01-09");
    REQUIRE(path.size() == 4);
    CHECK(path[0]->name == "Measuring transformer disconnect terminal");
    CHECK(path[1]->name == "Terminal block systems");
    CHECK(path[2]->id == "27-25");
    CHECK(path[3]->id == "27");
    CHECK(path[3]->level == 1);
}

TEST_CASE("category_path equals a naive parent-chasing loop on every fixture class") {
    Taxonomy tax = testutil::fixture_taxonomy();
    Catalog catalog = testutil::fixture_catalog(tax);
    for (const auto& p : catalog.products()) {
        auto path = category_path(tax, p.commodity_class_id);

        // oracle: repeated parent lookup straight off the category map
        std::vector<std::string> naive;
        std::string cursor = p.commodity_class_id;
        while (true) {
            naive.push_back(cursor);
            const auto& cat = tax.categories().at(cursor);
            if (!cat.parent_id) break;
            cursor = *cat.parent_id;
        }

        REQUIRE(path.size() == naive.size());
        for (std::size_t i = 0; i < path.size(); ++i) CHECK(path[i]->id == naive[i]);
    }
    CHECK_THROWS_AS(category_path(tax, "27-25"), DataError);    // not level 4
    CHECK_THROWS_AS(category_path(tax, "nope"), DataError);
}

TEST_CASE("select_attributes honors the data level") {
    Product p = sample_product();

    CHECK(select_attributes(p, DataLevel::minimal).empty());

    auto basic = select_attributes(p, DataLevel::basic);
    CHECK(basic.size() == 1);
    CHECK(basic.count("color") == 1);

    auto advanced = select_attributes(p, DataLevel::advanced);
    CHECK(advanced.size() == 3);

    SUBCASE("basic equals advanced when every key is basic") {
        for (const auto& [k, v] : p.attributes) p.basic_attribute_names.insert(k);
        CHECK(select_attributes(p, DataLevel::basic) == select_attributes(p, DataLevel::advanced));
    }
}

TEST_CASE("fixture product with 10 attributes / 4 basic selects a sub-map") {
    Taxonomy tax = testutil::fixture_taxonomy();
    Catalog catalog = testutil::fixture_catalog(tax);
    const Product* p = catalog.find("3026700");
    REQUIRE(p != nullptr);
    REQUIRE(p->attributes.size() == 10);
    REQUIRE(p->basic_attribute_names.size() == 4);

    auto basic = select_attributes(*p, DataLevel::basic);
    auto advanced = select_attributes(*p, DataLevel::advanced);
    CHECK(basic.size() == 4);
    CHECK(advanced.size() == 10);
    // set-inclusion oracle
    for (const auto& [key, value] : basic) {
        auto it = advanced.find(key);
        REQUIRE(it != advanced.end());
        CHECK(it->second == value);
    }
}

TEST_CASE("compose_document at (minimal, CL0) has exactly the three product keys") {
    std::istringstream tax_in(chain_taxonomy_json());
    Taxonomy tax = load_taxonomy(tax_in);
    Product p = sample_product();

    auto doc = compose_document(p, tax, DataLevel::minimal, 0);
    Json parsed = Json::parse(doc.text);
    CHECK(parsed.size() == 3);
    CHECK(parsed.contains("name"));
    CHECK(parsed.contains("article_number"));
    CHECK(parsed.contains("short_description"));
    CHECK_FALSE(parsed.contains("attributes"));
    CHECK_FALSE(parsed.contains("categories"));
}

TEST_CASE("compose_document at CL1 appends exactly the commodity-class block") {
    std::istringstream tax_in(chain_taxonomy_json());
    Taxonomy tax = load_taxonomy(tax_in);
    Product p = sample_product();

    auto doc = compose_document(p, tax, DataLevel::basic, 1);
    Json parsed = Json::parse(doc.text);
    REQUIRE(parsed.contains("categories"));
    REQUIRE(parsed["categories"].size() == 1);
    CHECK(parsed["categories"][0]["level_name"] == "commodity_class");
    CHECK(parsed["categories"][0]["name"] == "Feed-through");
}

TEST_CASE("category blocks grow by exactly one per level over the fixture catalog") {
    Taxonomy tax = testutil::fixture_taxonomy();
    Catalog catalog = testutil::fixture_catalog(tax);
    for (const auto& p : catalog.products()) {
        std::size_t previous = 0;
        for (int cl = 1; cl <= 4; ++cl) {
            Json parsed =
                Json::parse(compose_document(p, tax, DataLevel::basic, cl).text);
            REQUIRE(parsed.contains("categories"));
            const auto& blocks = parsed["categories"];
            CHECK(blocks.size() == previous + 1);

            // prefix blocks identical to the previous level
            Json prev = previous == 0
                            ? Json::array()
                            : Json::parse(compose_document(p, tax, DataLevel::basic, cl - 1)
                                              .text)["categories"];
            for (std::size_t i = 0; i < prev.size(); ++i) CHECK(blocks[i] == prev[i]);
            previous = blocks.size();
        }
    }
}

TEST_CASE("compose_document is deterministic and orders keys canonically") {
    Taxonomy tax = testutil::fixture_taxonomy();
    Catalog catalog = testutil::fixture_catalog(tax);
    const Product& p = catalog.products().front();

    auto a = compose_document(p, tax, DataLevel::advanced, 4);
    auto b = compose_document(p, tax, DataLevel::advanced, 4);
    CHECK(a.text == b.text);

    Json parsed = Json::parse(a.text);
    std::vector<std::string> keys;
    for (auto it = parsed.begin(); it != parsed.end(); ++it) keys.push_back(it.key());
    std::sort(keys.begin(), keys.end());
    // attribute keys inside "attributes" appear lexicographically in the text
    const auto& text = a.text;
    std::size_t last = 0;
    for (const auto& [key, value] : select_attributes(p, DataLevel::advanced)) {
        auto pos = text.find("\"" + key + "\"");
        REQUIRE(pos != std::string::npos);
        CHECK(pos > last);
        last = pos;
    }
}

TEST_CASE("metadata sparsity is preserved in composed blocks") {
    Taxonomy tax = testutil::fixture_taxonomy();
    Catalog catalog = testutil::fixture_catalog(tax);
    // 27-25-01 ("Terminal block systems") has keywords but no definition
    const Product* p = catalog.find("3026700");
    REQUIRE(p != nullptr);
    Json parsed = Json::parse(compose_document(*p, tax, DataLevel::minimal, 2).text);
    const auto& group_block = parsed["categories"][1];
    CHECK(group_block["name"] == "Terminal block systems");
    CHECK_FALSE(group_block.contains("definition"));
    CHECK(group_block.contains("keywords"));

    // 27 (segment) has keywords but no definition either; CL4 block
    Json full = Json::parse(compose_document(*p, tax, DataLevel::minimal, 4).text);
    const auto& segment_block = full["categories"][3];
    CHECK(segment_block["level_name"] == "segment");
    CHECK_FALSE(segment_block.contains("definition"));
}

TEST_CASE("compose_document rejects out-of-range category levels") {
    Taxonomy tax = testutil::fixture_taxonomy();
    Catalog catalog = testutil::fixture_catalog(tax);
    CHECK_THROWS_AS(compose_document(catalog.products().front(), tax, DataLevel::basic, 5),
                    DataError);
    CHECK_THROWS_AS(compose_document(catalog.products().front(), tax, DataLevel::basic, -1),
                    DataError);
}
