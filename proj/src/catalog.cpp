#include "taxsearch/catalog.hpp"

#include <algorithm>
#include <unordered_set>

namespace taxsearch {

namespace {

const char* level_name(int level) {
    switch (level) {
        case 1: return "segment";
        case 2: return "main_group";
        case 3: return "group";
        case 4: return "commodity_class";
        default: throw DataError("category level out of range: " + std::to_string(level));
    }
}

std::string require_string(const Json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        throw DataError(where + ": missing or non-string field '" + key + "'");
    return it->get<std::string>();
}

} // namespace

Taxonomy Taxonomy::from_categories(std::vector<Category> categories) {
    Taxonomy tax;
    for (auto& cat : categories) {
        if (cat.id.empty()) throw DataError("category with empty id");
        if (cat.level < 1 || cat.level > 4)
            throw DataError("category '" + cat.id + "': level must be 1..4, got " +
                            std::to_string(cat.level));
        auto [it, inserted] = tax.categories_.emplace(cat.id, std::move(cat));
        if (!inserted) throw DataError("duplicate id '" + it->first + "'");
    }
    for (const auto& [id, cat] : tax.categories_) {
        if (cat.level == 1) {
            if (cat.parent_id)
                throw DataError("segment '" + id + "' must not have a parent");
            continue;
        }
        if (!cat.parent_id)
            throw DataError("category '" + id + "' (level " + std::to_string(cat.level) +
                            ") requires a parent");
        const Category* parent = tax.find(*cat.parent_id);
        if (!parent)
            throw DataError("dangling parent '" + *cat.parent_id + "' referenced by '" + id + "'");
        if (parent->level != cat.level - 1)
            throw DataError("category '" + id + "' (level " + std::to_string(cat.level) +
                            ") has parent '" + parent->id + "' at level " +
                            std::to_string(parent->level) + "; path depth must be 4");
    }
    return tax;
}

const Category* Taxonomy::find(const std::string& id) const {
    auto it = categories_.find(id);
    return it == categories_.end() ? nullptr : &it->second;
}

const Category& Taxonomy::at(const std::string& id) const {
    const Category* cat = find(id);
    if (!cat) throw DataError("unknown category id '" + id + "'");
    return *cat;
}

DataLevel parse_data_level(const std::string& name) {
    if (name == "minimal") return DataLevel::minimal;
    if (name == "basic") return DataLevel::basic;
    if (name == "advanced") return DataLevel::advanced;
    throw DataError("unknown data level '" + name + "' (expected minimal|basic|advanced)");
}

const char* to_string(DataLevel level) {
    switch (level) {
        case DataLevel::minimal: return "minimal";
        case DataLevel::basic: return "basic";
        case DataLevel::advanced: return "advanced";
    }
    throw DataError("invalid data level");
}

void validate_category_level(int category_level) {
    if (category_level < 0 || category_level > kMaxCategoryLevel)
        throw DataError("category level must be 0..4, got " + std::to_string(category_level));
}

Taxonomy load_taxonomy(std::istream& source) {
    Json doc;
    try {
        doc = Json::parse(source);
    } catch (const Json::parse_error& e) {
        throw DataError(std::string("malformed taxonomy JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("categories") || !doc["categories"].is_array())
        throw DataError("taxonomy JSON must be an object with a 'categories' array");

    std::vector<Category> categories;
    categories.reserve(doc["categories"].size());
    for (const auto& entry : doc["categories"]) {
        if (!entry.is_object()) throw DataError("taxonomy category entry is not an object");
        Category cat;
        cat.id = require_string(entry, "id", "taxonomy category");
        const std::string where = "category '" + cat.id + "'";
        auto lvl = entry.find("level");
        if (lvl == entry.end() || !lvl->is_number_integer())
            throw DataError(where + ": missing or non-integer field 'level'");
        cat.level = lvl->get<int>();
        cat.name = require_string(entry, "name", where);
        if (entry.contains("definition")) {
            if (!entry["definition"].is_string())
                throw DataError(where + ": 'definition' must be a string");
            cat.definition = entry["definition"].get<std::string>();
        }
        if (entry.contains("keywords")) {
            if (!entry["keywords"].is_array())
                throw DataError(where + ": 'keywords' must be an array");
            for (const auto& kw : entry["keywords"]) {
                if (!kw.is_string()) throw DataError(where + ": keyword must be a string");
                cat.keywords.push_back(kw.get<std::string>());
            }
        }
        if (entry.contains("parent_id")) {
            if (!entry["parent_id"].is_string())
                throw DataError(where + ": 'parent_id' must be a string");
            cat.parent_id = entry["parent_id"].get<std::string>();
        }
        categories.push_back(std::move(cat));
    }
    return Taxonomy::from_categories(std::move(categories));
}

std::vector<Product> load_products(std::istream& source, const Taxonomy& taxonomy) {
    std::vector<Product> products;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json obj;
        try {
            obj = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed product JSON: " +
                            e.what());
        }
        const std::string where = "line " + std::to_string(line_no);
        if (!obj.is_object()) throw DataError(where + ": product record is not an object");

        Product p;
        p.article_number = require_string(obj, "article_number", where);
        p.name = require_string(obj, "name", where);
        p.short_description = require_string(obj, "short_description", where);
        p.commodity_class_id = require_string(obj, "commodity_class_id", where);

        if (obj.contains("attributes")) {
            if (!obj["attributes"].is_object())
                throw DataError(where + ": 'attributes' must be an object");
            for (const auto& [key, value] : obj["attributes"].items()) {
                if (!value.is_string() && !value.is_number() && !value.is_boolean())
                    throw DataError(where + ": attribute '" + key +
                                    "' must be a scalar (string, number, or boolean)");
                p.attributes.emplace(key, value);
            }
        }
        if (obj.contains("basic_attribute_names")) {
            if (!obj["basic_attribute_names"].is_array())
                throw DataError(where + ": 'basic_attribute_names' must be an array");
            for (const auto& name : obj["basic_attribute_names"]) {
                if (!name.is_string())
                    throw DataError(where + ": basic attribute name must be a string");
                p.basic_attribute_names.insert(name.get<std::string>());
            }
        }

        const Category* cls = taxonomy.find(p.commodity_class_id);
        if (!cls)
            throw DataError(where + ": product '" + p.article_number +
                            "' references unknown commodity class '" + p.commodity_class_id + "'");
        if (cls->level != 4)
            throw DataError(where + ": product '" + p.article_number + "' commodity class '" +
                            p.commodity_class_id + "' is level " + std::to_string(cls->level) +
                            ", expected 4");
        for (const auto& name : p.basic_attribute_names) {
            if (!p.attributes.count(name))
                throw DataError(where + ": product '" + p.article_number +
                                "' basic attribute '" + name + "' not present in attributes");
        }
        if (!seen.insert(p.article_number).second)
            throw DataError(where + ": duplicate article_number '" + p.article_number + "'");
        products.push_back(std::move(p));
    }
    return products;
}

std::vector<const Category*> category_path(const Taxonomy& taxonomy,
                                           const std::string& commodity_class_id) {
    const Category* cat = taxonomy.find(commodity_class_id);
    if (!cat) throw DataError("unknown commodity class id '" + commodity_class_id + "'");
    if (cat->level != 4)
        throw DataError("category '" + commodity_class_id + "' is level " +
                        std::to_string(cat->level) + ", expected a commodity class (level 4)");
    std::vector<const Category*> path;
    path.reserve(4);
    while (true) {
        path.push_back(cat);
        if (!cat->parent_id) break;
        cat = &taxonomy.at(*cat->parent_id);
    }
    return path;
}

std::map<std::string, Json> select_attributes(const Product& product, DataLevel data_level) {
    switch (data_level) {
        case DataLevel::minimal:
            return {};
        case DataLevel::basic: {
            std::map<std::string, Json> out;
            for (const auto& [key, value] : product.attributes)
                if (product.basic_attribute_names.count(key)) out.emplace(key, value);
            return out;
        }
        case DataLevel::advanced:
            return product.attributes;
    }
    throw DataError("invalid data level");
}

ComposedDocument compose_document(const Product& product, const Taxonomy& taxonomy,
                                  DataLevel data_level, CategoryLevel category_level) {
    validate_category_level(category_level);

    OrderedJson doc;
    doc["name"] = product.name;
    doc["article_number"] = product.article_number;
    doc["short_description"] = product.short_description;

    auto attrs = select_attributes(product, data_level);
    if (!attrs.empty()) {
        OrderedJson amap = OrderedJson::object();
        for (const auto& [key, value] : attrs) amap[key] = value;
        doc["attributes"] = std::move(amap);
    }

    if (category_level >= 1) {
        auto path = category_path(taxonomy, product.commodity_class_id);
        OrderedJson blocks = OrderedJson::array();
        for (int i = 0; i < category_level; ++i) {
            const Category* cat = path[static_cast<std::size_t>(i)];
            OrderedJson block;
            block["level_name"] = level_name(cat->level);
            block["name"] = cat->name;
            if (cat->definition) block["definition"] = *cat->definition;
            if (!cat->keywords.empty()) block["keywords"] = cat->keywords;
            blocks.push_back(std::move(block));
        }
        doc["categories"] = std::move(blocks);
    }

    ComposedDocument out;
    out.product_id = product.article_number;
    out.data_level = data_level;
    out.category_level = category_level;
    out.text = doc.dump();
    return out;
}

Catalog::Catalog(std::vector<Product> products) : products_(std::move(products)) {
    by_article_.reserve(products_.size());
    for (std::size_t i = 0; i < products_.size(); ++i) {
        auto [it, inserted] = by_article_.emplace(products_[i].article_number, i);
        if (!inserted)
            throw DataError("duplicate article_number '" + products_[i].article_number + "'");
    }
}

const Product* Catalog::find(const std::string& article_number) const {
    auto it = by_article_.find(article_number);
    return it == by_article_.end() ? nullptr : &products_[it->second];
}

std::size_t Catalog::distinct_class_count() const {
    std::unordered_set<std::string> classes;
    for (const auto& p : products_) classes.insert(p.commodity_class_id);
    return classes.size();
}

std::vector<ComposedDocument> compose_all(const Catalog& catalog, const Taxonomy& taxonomy,
                                          DataLevel data_level, CategoryLevel category_level) {
    std::vector<ComposedDocument> docs;
    docs.reserve(catalog.size());
    for (const auto& p : catalog.products())
        docs.push_back(compose_document(p, taxonomy, data_level, category_level));
    return docs;
}

} // namespace taxsearch
