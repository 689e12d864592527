#include <random>
#include <set>
#include <unordered_set>

#include "taxsearch/evalharness.hpp"

namespace taxsearch {

namespace {

// All draws go through this wrapper in a fixed order; mt19937_64 has a
// standardized output sequence, so a given seed yields identical data on
// every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
    bool bernoulli(double p) {
        return (static_cast<double>(next() >> 11) * 0x1.0p-53) < p;
    }

private:
    std::mt19937_64 engine_;
};

class WordPool {
public:
    explicit WordPool(Rng& rng) : rng_(rng) {}

    // Pronounceable pseudo-word, unique across the whole bundle so token
    // pools stay disjoint by construction.
    std::string fresh() {
        static const char* consonants = "bdfgklmnprstvz";
        static const char* vowels = "aeiou";
        while (true) {
            std::string word;
            for (int s = 0; s < 3; ++s) {
                word.push_back(consonants[rng_.below(14)]);
                word.push_back(vowels[rng_.below(5)]);
            }
            if (used_.insert(word).second) return word;
        }
    }

    std::vector<std::string> fresh_n(std::size_t n) {
        std::vector<std::string> words;
        words.reserve(n);
        for (std::size_t i = 0; i < n; ++i) words.push_back(fresh());
        return words;
    }

private:
    Rng& rng_;
    std::unordered_set<std::string> used_;
};

std::string pad2(std::size_t n) {
    std::string s = std::to_string(n);
    return s.size() < 2 ? "0" + s : s;
}

void validate_spec(const BenchSpec& spec) {
    if (spec.n_segments < 1 || spec.fanout < 1 || spec.n_commodity_classes < 1 ||
        spec.products_per_class < 1 || spec.queries_per_class < 1)
        throw DataError("benchmark spec counts must be >= 1");
    auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!rate_ok(spec.mismatch_rate) || !rate_ok(spec.definition_rate) ||
        !rate_ok(spec.keyword_rate))
        throw DataError("benchmark spec rates must be in [0,1]");
    if (spec.mismatch_rate > 0.0 && spec.definition_rate == 0.0 && spec.keyword_rate == 0.0)
        throw DataError(
            "infeasible benchmark spec: mismatch_rate > 0 requires metadata coverage > 0");
}

} // namespace

BenchSpec bench_spec_from_json(const Json& j) {
    if (!j.is_object()) throw DataError("benchmark spec must be a JSON object");
    BenchSpec spec;
    auto get_int = [&](const char* key, int& out) {
        if (j.contains(key)) out = j[key].get<int>();
    };
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    get_int("n_segments", spec.n_segments);
    get_int("fanout", spec.fanout);
    get_int("n_commodity_classes", spec.n_commodity_classes);
    get_int("products_per_class", spec.products_per_class);
    get_int("queries_per_class", spec.queries_per_class);
    if (j.contains("mismatch_rate")) spec.mismatch_rate = j["mismatch_rate"].get<double>();
    if (j.contains("metadata_coverage")) {
        const auto& mc = j["metadata_coverage"];
        if (mc.contains("definition_rate"))
            spec.definition_rate = mc["definition_rate"].get<double>();
        if (mc.contains("keyword_rate")) spec.keyword_rate = mc["keyword_rate"].get<double>();
    }
    validate_spec(spec);
    return spec;
}

OrderedJson bench_spec_to_json(const BenchSpec& spec) {
    OrderedJson j;
    j["seed"] = spec.seed;
    j["n_segments"] = spec.n_segments;
    j["fanout"] = spec.fanout;
    j["n_commodity_classes"] = spec.n_commodity_classes;
    j["products_per_class"] = spec.products_per_class;
    j["queries_per_class"] = spec.queries_per_class;
    j["mismatch_rate"] = spec.mismatch_rate;
    j["metadata_coverage"] = OrderedJson{{"definition_rate", spec.definition_rate},
                                         {"keyword_rate", spec.keyword_rate}};
    return j;
}

SyntheticBundle generate_synthetic(const BenchSpec& spec) {
    validate_spec(spec);
    Rng rng(spec.seed);
    WordPool pool(rng);
    SyntheticBundle bundle;

    const auto filler = pool.fresh_n(24);
    auto pick_filler = [&]() { return filler[rng.below(filler.size())]; };

    // Taxonomy skeleton: segments -> main groups -> groups, with the
    // commodity classes spread round-robin over the groups.
    std::vector<Category> categories;
    std::vector<std::string> group_ids;
    for (int s = 0; s < spec.n_segments; ++s) {
        Category segment;
        segment.id = pad2(static_cast<std::size_t>(10 + s));
        segment.level = 1;
        segment.name = pool.fresh() + " " + pool.fresh();
        categories.push_back(segment);
        for (int m = 0; m < spec.fanout; ++m) {
            Category main_group;
            main_group.id = segment.id + "-" + pad2(static_cast<std::size_t>(m + 1));
            main_group.level = 2;
            main_group.name = pool.fresh() + " " + pool.fresh();
            main_group.parent_id = segment.id;
            categories.push_back(main_group);
            for (int g = 0; g < spec.fanout; ++g) {
                Category group;
                group.id = main_group.id + "-" + pad2(static_cast<std::size_t>(g + 1));
                group.level = 3;
                group.name = pool.fresh() + " " + pool.fresh();
                group.parent_id = main_group.id;
                categories.push_back(group);
                group_ids.push_back(group.id);
            }
        }
    }

    struct ClassInfo {
        std::string id;
        std::vector<std::string> core;   // in every product name/description
        std::vector<std::string> aux;    // attribute values
        std::vector<std::string> meta;   // category metadata only
        std::vector<std::string> articles;
    };
    std::vector<ClassInfo> classes(static_cast<std::size_t>(spec.n_commodity_classes));
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const std::string& group = group_ids[c % group_ids.size()];
        classes[c].id = group + "-" + pad2(c / group_ids.size() + 1);
        Category cls;
        cls.id = classes[c].id;
        cls.level = 4;
        cls.name = pool.fresh() + " " + pool.fresh();
        cls.parent_id = group;
        categories.push_back(cls);
        classes[c].core = pool.fresh_n(3);
        classes[c].aux = pool.fresh_n(3);
        classes[c].meta = pool.fresh_n(4);
    }

    // Metadata coverage draws happen for every category in insertion order so
    // the stream of draws is independent of the coverage rates themselves.
    std::size_t class_index = 0;
    for (auto& cat : categories) {
        const bool has_definition = rng.bernoulli(spec.definition_rate);
        const bool has_keywords = rng.bernoulli(spec.keyword_rate);
        if (cat.level == 4) {
            const auto& info = classes[class_index++];
            const std::string example = pick_filler();
            if (has_definition)
                cat.definition = "covers " + info.meta[0] + " " + info.meta[1] + " " +
                                 info.meta[2] + " " + info.meta[3] + " applications such as " +
                                 example;
            if (has_keywords) cat.keywords = info.meta;
        } else {
            auto words = pool.fresh_n(2);
            if (has_definition)
                cat.definition = "general " + words[0] + " " + words[1] + " range";
            if (has_keywords) cat.keywords = words;
        }
    }
    bundle.taxonomy = Taxonomy::from_categories(std::move(categories));

    // Products: class-disjoint vocabulary, shared attribute schema.
    std::size_t article_seq = 100000;
    for (auto& info : classes) {
        for (int p = 0; p < spec.products_per_class; ++p) {
            Product product;
            product.article_number = "A" + std::to_string(article_seq++);
            product.commodity_class_id = info.id;
            product.name = info.core[0] + " " + info.core[1] + " " + std::to_string(p + 1);
            product.short_description = "standard " + info.core[0] + " " + info.core[1] + " " +
                                        info.core[2] + " module with " + pick_filler() + " and " +
                                        pick_filler();
            product.attributes["connection"] = info.aux[0];
            product.attributes["material"] = info.aux[1];
            product.attributes["mounting"] = info.aux[2];
            product.attributes["width_mm"] = static_cast<double>(4 + rng.below(96));
            product.attributes["rated_current_a"] = static_cast<double>(1 + rng.below(63));
            product.attributes["poles"] = static_cast<int>(1 + rng.below(12));
            product.attributes["shielded"] = rng.bernoulli(0.5);
            product.basic_attribute_names = {"connection", "poles", "width_mm"};
            info.articles.push_back(product.article_number);
            bundle.products.push_back(std::move(product));
        }
    }

    // Queries: 4 discriminative tokens per query; each slot draws from the
    // class's metadata-only vocabulary at mismatch_rate, otherwise from the
    // core tokens present in every product of the class.
    std::size_t query_seq = 0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto& info = classes[c];
        for (int q = 0; q < spec.queries_per_class; ++q) {
            std::vector<std::string> tokens;
            for (int t = 0; t < 4; ++t) {
                if (rng.bernoulli(spec.mismatch_rate))
                    tokens.push_back(info.meta[rng.below(info.meta.size())]);
                else
                    tokens.push_back(info.core[rng.below(info.core.size())]);
            }
            // dedupe, order-preserving
            std::vector<std::string> uniq;
            for (auto& t : tokens)
                if (std::find(uniq.begin(), uniq.end(), t) == uniq.end()) uniq.push_back(t);

            EvalSample sample;
            sample.query_id = "q" + std::to_string(query_seq);
            sample.cohort = (query_seq % 2 == 0) ? Cohort::expert : Cohort::trainee;
            ++query_seq;
            sample.relevant_ids.insert(info.articles.begin(), info.articles.end());
            for (std::size_t i = 0; i < uniq.size(); ++i) {
                if (i) sample.query_text += ' ';
                sample.query_text += uniq[i];
            }

            EvalSample aliased = sample;
            aliased.query_text.clear();
            for (std::size_t i = 0; i < uniq.size(); ++i) {
                auto it = std::find_if(
                    bundle.synonyms.begin(), bundle.synonyms.end(),
                    [&](const auto& kv) { return kv.second == uniq[i]; });
                std::string alias;
                if (it != bundle.synonyms.end()) {
                    alias = it->first;
                } else {
                    alias = pool.fresh();
                    bundle.synonyms.emplace(alias, uniq[i]);
                }
                if (i) aliased.query_text += ' ';
                aliased.query_text += alias;
            }

            bundle.dataset.push_back(std::move(sample));
            bundle.synonym_queries.push_back(std::move(aliased));
        }
    }
    return bundle;
}

} // namespace taxsearch
