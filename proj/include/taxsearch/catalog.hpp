#pragma once

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "taxsearch/common.hpp"

namespace taxsearch {

// One node of the 4-level classification tree. Level 1 = segment,
// 2 = main group, 3 = group, 4 = commodity class.
struct Category {
    std::string id;
    int level = 1;
    std::string name;
    std::optional<std::string> definition;
    std::vector<std::string> keywords;
    std::optional<std::string> parent_id; // absent iff level == 1
};

class Taxonomy {
public:
    Taxonomy() = default;

    // Validates parent links: every non-segment category must point to an
    // existing parent exactly one level up, so level-4 paths always have
    // depth 4 and cycles are impossible.
    static Taxonomy from_categories(std::vector<Category> categories);

    const Category* find(const std::string& id) const;
    const Category& at(const std::string& id) const;

    std::size_t size() const { return categories_.size(); }
    const std::map<std::string, Category>& categories() const { return categories_; }

private:
    std::map<std::string, Category> categories_;
};

struct Product {
    std::string article_number;
    std::string name;
    std::string short_description;
    std::string commodity_class_id;
    // Scalar JSON values (string | number | boolean); unit suffixes live in
    // the key, e.g. "rated current [A]". std::map keeps keys lexicographic.
    std::map<std::string, Json> attributes;
    std::set<std::string> basic_attribute_names;
};

enum class DataLevel { minimal = 0, basic = 1, advanced = 2 };

DataLevel parse_data_level(const std::string& name);
const char* to_string(DataLevel level);

// 0 = product-only, 1..4 = number of ancestor category blocks appended.
using CategoryLevel = int;
inline constexpr int kMaxCategoryLevel = 4;

void validate_category_level(int category_level);

struct ComposedDocument {
    std::string product_id;
    DataLevel data_level = DataLevel::minimal;
    CategoryLevel category_level = 0;
    std::string text; // canonical JSON, byte-stable for equal inputs
};

Taxonomy load_taxonomy(std::istream& source);
std::vector<Product> load_products(std::istream& source, const Taxonomy& taxonomy);

// Path from the commodity class up to its segment: result[0].level == 4,
// result[3].level == 1.
std::vector<const Category*> category_path(const Taxonomy& taxonomy,
                                           const std::string& commodity_class_id);

// minimal -> {} (name/article/short description are separate JSON keys),
// basic -> attributes restricted to basic_attribute_names, advanced -> all.
std::map<std::string, Json> select_attributes(const Product& product, DataLevel data_level);

ComposedDocument compose_document(const Product& product, const Taxonomy& taxonomy,
                                  DataLevel data_level, CategoryLevel category_level);

// Immutable product collection with article-number lookup.
class Catalog {
public:
    Catalog() = default;
    explicit Catalog(std::vector<Product> products);

    const std::vector<Product>& products() const { return products_; }
    const Product* find(const std::string& article_number) const;
    std::size_t size() const { return products_.size(); }
    std::size_t distinct_class_count() const;

private:
    std::vector<Product> products_;
    std::unordered_map<std::string, std::size_t> by_article_;
};

std::vector<ComposedDocument> compose_all(const Catalog& catalog, const Taxonomy& taxonomy,
                                          DataLevel data_level, CategoryLevel category_level);

} // namespace taxsearch
