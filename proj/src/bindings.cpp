#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <memory>

#include "taxsearch/evalharness.hpp"
#include "taxsearch/pipeline.hpp"

namespace py = pybind11;
using namespace taxsearch;

namespace {

py::object json_to_py(const OrderedJson& j) {
    switch (j.type()) {
        case OrderedJson::value_t::null: return py::none();
        case OrderedJson::value_t::boolean: return py::bool_(j.get<bool>());
        case OrderedJson::value_t::number_integer: return py::int_(j.get<long long>());
        case OrderedJson::value_t::number_unsigned:
            return py::int_(j.get<unsigned long long>());
        case OrderedJson::value_t::number_float: return py::float_(j.get<double>());
        case OrderedJson::value_t::string: return py::str(j.get<std::string>());
        case OrderedJson::value_t::array: {
            py::list list;
            for (const auto& item : j) list.append(json_to_py(item));
            return list;
        }
        case OrderedJson::value_t::object: {
            py::dict dict;
            for (const auto& [key, value] : j.items())
                dict[py::str(key)] = json_to_py(value);
            return dict;
        }
        default: return py::none();
    }
}

Taxonomy load_taxonomy_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    return load_taxonomy(in);
}

Catalog load_catalog_file(const std::string& path, const Taxonomy& taxonomy) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    return Catalog(load_products(in, taxonomy));
}

std::vector<ComposedDocument> docs_from_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    std::vector<ComposedDocument> docs;
    docs.reserve(pairs.size());
    for (const auto& [id, text] : pairs) {
        ComposedDocument doc;
        doc.product_id = id;
        doc.text = text;
        docs.push_back(std::move(doc));
    }
    return docs;
}

// Hashing-embedded exact-cosine index over (id, text) pairs.
class HashingSearcher {
public:
    HashingSearcher(const std::vector<std::pair<std::string, std::string>>& docs, int dimension,
                    const std::map<std::string, std::string>& synonyms)
        : provider_(dimension, synonyms) {
        index_ = VectorIndex::build(docs_from_pairs(docs), provider_);
    }

    std::vector<std::pair<std::string, double>> search(const std::string& query, int top_k) {
        auto vectors = embed_texts(provider_, {query}, InputRole::query);
        auto hits = index_.search(vectors.front(), top_k, provider_.name());
        std::vector<std::pair<std::string, double>> out;
        out.reserve(hits.size());
        for (const auto& hit : hits) out.emplace_back(hit.doc_id, hit.score);
        return out;
    }

    std::size_t size() const { return index_.size(); }

private:
    HashingProvider provider_;
    VectorIndex index_;
};

class PyEngine {
public:
    PyEngine(const std::string& store_dir, const std::string& config_path) {
        std::ifstream tax_in(store_dir + "/taxonomy.json");
        if (!tax_in) throw DataError("store missing taxonomy.json: " + store_dir);
        auto taxonomy = std::make_shared<Taxonomy>(load_taxonomy(tax_in));
        std::ifstream cat_in(store_dir + "/catalog.jsonl");
        if (!cat_in) throw DataError("store missing catalog.jsonl: " + store_dir);
        auto catalog = std::make_shared<Catalog>(load_products(cat_in, *taxonomy));
        config_ = load_search_config(config_path);
        auto factory = std::make_shared<StageFactory>();
        IndexSet indices =
            prepare_indices(*catalog, *taxonomy, {config_}, store_dir + "/indices", *factory);
        engine_ = std::make_unique<SearchEngine>(catalog, taxonomy, std::move(indices), factory);
    }

    py::object search(const std::string& query) {
        SearchOutcome outcome = engine_->run_search(config_, query);
        return json_to_py(outcome_to_json(outcome, &engine_->catalog()));
    }

private:
    SearchConfig config_;
    std::unique_ptr<SearchEngine> engine_;
};

} // namespace

PYBIND11_MODULE(_taxsearch, m) {
    m.doc() = "taxonomy-augmented semantic product search core";

    py::register_exception<DataError>(m, "DataError");
    py::register_exception<ProviderError>(m, "ProviderError");
    py::register_exception<UsageError>(m, "UsageError");

    m.def("tokenize", &tokenize, py::arg("text"));
    m.def(
        "hashing_embed",
        [](const std::string& text, int dimension,
           const std::map<std::string, std::string>& synonyms) {
            auto v = hashing_embed(text, dimension, synonyms);
            return std::vector<double>(v.begin(), v.end());
        },
        py::arg("text"), py::arg("dimension"),
        py::arg("synonyms") = std::map<std::string, std::string>{});
    m.def(
        "cosine",
        [](const std::vector<float>& u, const std::vector<float>& v) { return cosine(u, v); },
        py::arg("u"), py::arg("v"));
    m.def("overlap_score", &overlap_score, py::arg("query"), py::arg("doc_text"));
    m.def(
        "compute_metrics",
        [](const std::vector<std::string>& ids, const std::vector<std::string>& relevant,
           int k) {
            RankedResult result{"q", ids};
            Judgment judgment{"q", {relevant.begin(), relevant.end()}};
            MetricVector v = compute_metrics(result, judgment, k);
            py::dict out;
            out["hit_rate_at_k"] = v.hit_rate_at_k;
            out["hits_at_k"] = v.hits_at_k;
            out["mrr"] = v.mrr;
            out["recall"] = v.recall;
            out["precision_at_k"] = v.precision_at_k;
            out["r_precision"] = v.r_precision;
            out["r_precision_at_k"] = v.r_precision_at_k;
            out["k"] = v.k;
            return out;
        },
        py::arg("ids"), py::arg("relevant_ids"), py::arg("k"));

    py::class_<Taxonomy>(m, "Taxonomy")
        .def_static("load", &load_taxonomy_file, py::arg("path"))
        .def("__len__", &Taxonomy::size)
        .def("category_path", [](const Taxonomy& taxonomy, const std::string& id) {
            py::list out;
            for (const Category* cat : category_path(taxonomy, id)) {
                py::dict entry;
                entry["id"] = cat->id;
                entry["level"] = cat->level;
                entry["name"] = cat->name;
                out.append(entry);
            }
            return out;
        });

    py::class_<Catalog>(m, "Catalog")
        .def_static("load", &load_catalog_file, py::arg("path"), py::arg("taxonomy"))
        .def("__len__", &Catalog::size)
        .def("articles", [](const Catalog& catalog) {
            std::vector<std::string> out;
            out.reserve(catalog.size());
            for (const auto& product : catalog.products()) out.push_back(product.article_number);
            return out;
        });

    m.def(
        "compose_document",
        [](const Catalog& catalog, const Taxonomy& taxonomy, const std::string& article_number,
           const std::string& data_level, int category_level) {
            const Product* product = catalog.find(article_number);
            if (!product) throw DataError("unknown article_number '" + article_number + "'");
            return compose_document(*product, taxonomy, parse_data_level(data_level),
                                    category_level)
                .text;
        },
        py::arg("catalog"), py::arg("taxonomy"), py::arg("article_number"),
        py::arg("data_level"), py::arg("category_level"));

    py::class_<Bm25Index>(m, "Bm25Index")
        .def_static(
            "build",
            [](const std::vector<std::pair<std::string, std::string>>& docs, double k1,
               double b) {
                Bm25Params params;
                params.k1 = k1;
                params.b = b;
                return Bm25Index::build(docs_from_pairs(docs), params);
            },
            py::arg("docs"), py::arg("k1") = 1.2, py::arg("b") = 0.75)
        .def("__len__", &Bm25Index::doc_count)
        .def(
            "search",
            [](const Bm25Index& index, const std::string& query, int top_k) {
                std::vector<std::pair<std::string, double>> out;
                for (const auto& hit : index.search(query, top_k))
                    out.emplace_back(hit.doc_id, hit.score);
                return out;
            },
            py::arg("query"), py::arg("top_k"));

    py::class_<HashingSearcher>(m, "HashingSearcher")
        .def(py::init<const std::vector<std::pair<std::string, std::string>>&, int,
                      const std::map<std::string, std::string>&>(),
             py::arg("docs"), py::arg("dimension") = 512,
             py::arg("synonyms") = std::map<std::string, std::string>{})
        .def("__len__", &HashingSearcher::size)
        .def("search", &HashingSearcher::search, py::arg("query"), py::arg("top_k"));

    py::class_<PyEngine>(m, "SearchEngine")
        .def(py::init<const std::string&, const std::string&>(), py::arg("store_dir"),
             py::arg("config_path"))
        .def("search", &PyEngine::search, py::arg("query"));

    m.def(
        "generate_synthetic_files",
        [](const py::dict& spec_dict, const std::string& out_dir) {
            Json j = Json::object();
            for (const auto& item : spec_dict) {
                std::string key = py::cast<std::string>(item.first);
                if (key == "mismatch_rate") {
                    j[key] = py::cast<double>(item.second);
                } else if (key == "metadata_coverage") {
                    py::dict mc = py::cast<py::dict>(item.second);
                    Json mcj = Json::object();
                    for (const auto& kv : mc)
                        mcj[py::cast<std::string>(kv.first)] = py::cast<double>(kv.second);
                    j[key] = mcj;
                } else {
                    j[key] = py::cast<long long>(item.second);
                }
            }
            BenchSpec spec = bench_spec_from_json(j);
            SyntheticBundle bundle = generate_synthetic(spec);
            std::filesystem::create_directories(out_dir);
            write_file(out_dir + "/taxonomy.json", taxonomy_to_json(bundle.taxonomy).dump(2) + "\n");
            write_file(out_dir + "/catalog.jsonl", products_to_jsonl(bundle.products));
            write_file(out_dir + "/dataset.jsonl", dataset_to_jsonl(bundle.dataset));
            py::dict out;
            out["categories"] = bundle.taxonomy.size();
            out["products"] = bundle.products.size();
            out["queries"] = bundle.dataset.size();
            return out;
        },
        py::arg("spec"), py::arg("out_dir"));
}
