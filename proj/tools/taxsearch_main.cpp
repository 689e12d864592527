#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "taxsearch/evalharness.hpp"
#include "taxsearch/pipeline.hpp"
#include "taxsearch/service.hpp"

namespace fs = std::filesystem;
using namespace taxsearch;

namespace {

struct Store {
    fs::path dir;
    std::shared_ptr<const Taxonomy> taxonomy;
    std::shared_ptr<const Catalog> catalog;
};

Store load_store(const std::string& dir) {
    Store store;
    store.dir = dir;
    const fs::path tax_path = store.dir / "taxonomy.json";
    const fs::path cat_path = store.dir / "catalog.jsonl";
    if (!fs::exists(tax_path) || !fs::exists(cat_path))
        throw DataError("store at '" + dir + "' is missing taxonomy.json/catalog.jsonl; run ingest");
    std::ifstream tax_in(tax_path);
    auto taxonomy = std::make_shared<Taxonomy>(load_taxonomy(tax_in));
    std::ifstream cat_in(cat_path);
    auto catalog = std::make_shared<Catalog>(load_products(cat_in, *taxonomy));
    store.taxonomy = std::move(taxonomy);
    store.catalog = std::move(catalog);
    return store;
}

std::vector<SearchConfig> load_grid(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw DataError("malformed grid JSON in " + path + ": " + e.what());
    }
    const Json* list = nullptr;
    if (j.is_array())
        list = &j;
    else if (j.is_object() && j.contains("configs") && j["configs"].is_array())
        list = &j["configs"];
    else
        throw DataError("grid file must be a JSON array or {\"configs\": [...]}: " + path);
    std::vector<SearchConfig> grid;
    for (const auto& entry : *list) grid.push_back(search_config_from_json(entry));
    if (grid.empty()) throw DataError("grid file contains no configs: " + path);
    return grid;
}

std::shared_ptr<SearchEngine> make_engine(const Store& store,
                                          const std::vector<SearchConfig>& configs) {
    auto factory = std::make_shared<StageFactory>();
    IndexSet indices =
        prepare_indices(*store.catalog, *store.taxonomy, configs, store.dir / "indices", *factory);
    return std::make_shared<SearchEngine>(store.catalog, store.taxonomy, std::move(indices),
                                          factory);
}

void zero_timings(SearchOutcome& outcome) {
    outcome.timings = StageTimings{};
}

int cmd_ingest(const std::string& taxonomy_path, const std::string& catalog_path,
               const std::string& out_dir) {
    std::ifstream tax_in(taxonomy_path);
    if (!tax_in) throw DataError("cannot open file: " + taxonomy_path);
    Taxonomy taxonomy = load_taxonomy(tax_in);
    std::ifstream cat_in(catalog_path);
    if (!cat_in) throw DataError("cannot open file: " + catalog_path);
    Catalog catalog(load_products(cat_in, taxonomy));

    fs::create_directories(out_dir);
    write_file((fs::path(out_dir) / "taxonomy.json").string(), read_file(taxonomy_path));
    write_file((fs::path(out_dir) / "catalog.jsonl").string(), read_file(catalog_path));
    OrderedJson meta;
    meta["products"] = catalog.size();
    meta["classes"] = catalog.distinct_class_count();
    meta["categories"] = taxonomy.size();
    write_file((fs::path(out_dir) / "meta.json").string(), meta.dump(2) + "\n");

    std::cout << "products=" << catalog.size() << " classes=" << catalog.distinct_class_count()
              << "\n";
    return 0;
}

int cmd_index(const std::string& store_dir, const std::string& data_level, int category_level,
              const std::string& retriever, const std::string& provider, int dim,
              const std::string& synonyms, const std::string& model, double k1, double b) {
    Store store = load_store(store_dir);
    SearchConfig config;
    config.data_level = parse_data_level(data_level);
    config.category_level = category_level;
    if (retriever == "dense") {
        config.retriever.kind = RetrieverConfig::Kind::dense;
        config.retriever.dense.provider = provider;
        config.retriever.dense.dimension = dim;
        config.retriever.dense.synonyms_path = synonyms;
        config.retriever.dense.model = model;
    } else if (retriever == "bm25") {
        config.retriever.kind = RetrieverConfig::Kind::bm25;
        config.retriever.bm25.k1 = k1;
        config.retriever.bm25.b = b;
    } else {
        throw UsageError("unknown retriever '" + retriever + "' (expected dense|bm25)");
    }

    StageFactory factory;
    IndexSet indices =
        prepare_indices(*store.catalog, *store.taxonomy, {config}, store.dir / "indices", factory);
    const PreparedIndex& prepared = indices.require(config);
    if (prepared.cache_hit)
        std::cout << "cache hit fp=" << prepared.fingerprint << "\n";
    else
        std::cout << "built fp=" << prepared.fingerprint << " docs=" << store.catalog->size()
                  << "\n";
    return 0;
}

int cmd_search(const std::string& store_dir, const std::string& config_path,
               const std::string& query, bool as_json) {
    if (query.find_first_not_of(" \t\r\n") == std::string::npos)
        throw UsageError("query must not be blank");
    Store store = load_store(store_dir);
    SearchConfig config = load_search_config(config_path);
    auto engine = make_engine(store, {config});
    SearchOutcome outcome = engine->run_search(config, query);

    if (as_json) {
        std::cout << outcome_to_json(outcome, store.catalog.get()).dump() << "\n";
        return 0;
    }
    std::cout << "rank\tarticle_number\tname\tscore\n";
    int rank = 1;
    for (const auto& item : outcome.results) {
        const Product* product = store.catalog->find(item.doc_id);
        std::cout << rank++ << "\t" << item.doc_id << "\t"
                  << (product ? product->name : std::string("?")) << "\t";
        std::printf("%.6f\n", item.score);
    }
    const auto& t = outcome.timings;
    std::printf("timings: rewrite=%.2fms embed=%.2fms retrieve=%.2fms rerank=%.2fms total=%.2fms\n",
                t.rewrite_ms, t.embed_ms, t.retrieve_ms, t.rerank_ms, t.total_ms);
    return 0;
}

int cmd_eval(const std::string& store_dir, const std::string& dataset_path,
             const std::string& grid_path, const std::string& config_path,
             const std::string& supplement_path, const std::string& out_dir,
             std::vector<int> ks, int workers, bool zero_latency) {
    Store store = load_store(store_dir);

    std::vector<SearchConfig> grid;
    if (!grid_path.empty()) grid = load_grid(grid_path);
    if (!config_path.empty()) grid.push_back(load_search_config(config_path));
    if (grid.empty()) throw UsageError("provide --grid or --config");

    std::ifstream dataset_in(dataset_path);
    if (!dataset_in) throw DataError("cannot open file: " + dataset_path);
    Dataset dataset = load_dataset(dataset_in, *store.catalog);
    if (!supplement_path.empty()) {
        std::ifstream supplement_in(supplement_path);
        if (!supplement_in) throw DataError("cannot open file: " + supplement_path);
        dataset = merge_judgments(dataset, load_supplement(supplement_in, *store.catalog));
    }

    auto engine = make_engine(store, grid);
    fs::create_directories(out_dir);

    if (ks.empty()) ks = {5, 20};
    std::ofstream outcomes((fs::path(out_dir) / "outcomes.jsonl").string(),
                           std::ios::binary | std::ios::trunc);
    bool first_pass = true;
    for (int k : ks) {
        OutcomeSink sink;
        if (first_pass) {
            sink = [&](const SearchConfig&, const SearchOutcome& o) {
                SearchOutcome copy = o;
                if (zero_latency) zero_timings(copy);
                outcomes << outcome_to_json(copy).dump() << "\n";
            };
        }
        MetricReport report = run_experiment(*engine, grid, dataset, k, workers, sink);
        first_pass = false;
        if (zero_latency)
            for (auto& row : report.rows) row.mean_latency_ms = 0.0;

        const std::string stem = "report_k" + std::to_string(k);
        write_file((fs::path(out_dir) / (stem + ".csv")).string(),
                   emit_report(report, ReportFormat::csv));
        write_file((fs::path(out_dir) / (stem + ".md")).string(),
                   emit_report(report, ReportFormat::markdown));
        std::cout << "wrote " << (fs::path(out_dir) / (stem + ".csv")).string() << " ("
                  << report.rows.size() << " rows)\n";
    }
    return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir, BenchSpec spec,
              const std::vector<std::string>& set_flags) {
    if (!spec_path.empty()) {
        Json j;
        try {
            j = Json::parse(read_file(spec_path));
        } catch (const Json::parse_error& e) {
            throw DataError("malformed spec JSON in " + spec_path + ": " + e.what());
        }
        spec = bench_spec_from_json(j);
        // flag overrides on top of the file are applied by the caller before
        // this point only for defaults; keep file authoritative otherwise
        (void)set_flags;
    }
    SyntheticBundle bundle = generate_synthetic(spec);

    fs::create_directories(out_dir);
    write_file((fs::path(out_dir) / "taxonomy.json").string(),
               taxonomy_to_json(bundle.taxonomy).dump(2) + "\n");
    write_file((fs::path(out_dir) / "catalog.jsonl").string(), products_to_jsonl(bundle.products));
    write_file((fs::path(out_dir) / "dataset.jsonl").string(), dataset_to_jsonl(bundle.dataset));
    write_file((fs::path(out_dir) / "dataset_synonyms.jsonl").string(),
               dataset_to_jsonl(bundle.synonym_queries));
    OrderedJson synonyms = OrderedJson::object();
    for (const auto& [alias, canonical] : bundle.synonyms) synonyms[alias] = canonical;
    write_file((fs::path(out_dir) / "synonyms.json").string(), synonyms.dump(2) + "\n");
    write_file((fs::path(out_dir) / "bench_spec.json").string(),
               bench_spec_to_json(spec).dump(2) + "\n");

    std::cout << "categories=" << bundle.taxonomy.size() << " products=" << bundle.products.size()
              << " queries=" << bundle.dataset.size() << "\n";
    return 0;
}

std::unique_ptr<SearchService> g_service;

void handle_signal(int) {
    if (g_service) g_service->stop();
}

int cmd_serve(const std::string& store_dir, const std::string& config_path,
              const std::string& listen) {
    auto colon = listen.rfind(':');
    if (colon == std::string::npos)
        throw UsageError("--listen expects host:port, got '" + listen + "'");
    const std::string host = listen.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
        throw UsageError("invalid port in --listen '" + listen + "'");
    }

    Store store = load_store(store_dir);
    SearchConfig config = load_search_config(config_path);
    auto engine = make_engine(store, {config});
    g_service = std::make_unique<SearchService>(engine, config);

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    g_service->run(host, port, [&host](int bound_port) {
        std::cout << "listening on " << host << ":" << bound_port << std::endl;
    });
    g_service.reset();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"taxonomy-augmented semantic product search"};
    app.require_subcommand(1);

    // ingest
    std::string taxonomy_path, catalog_path, out_dir;
    auto* ingest = app.add_subcommand("ingest", "validate taxonomy + catalog into a store");
    ingest->add_option("--taxonomy", taxonomy_path, "taxonomy JSON file")->required();
    ingest->add_option("--catalog", catalog_path, "catalog JSON-lines file")->required();
    ingest->add_option("--out", out_dir, "store directory")->required();

    // index
    std::string store_dir, data_level = "basic", retriever = "dense", provider = "hashing";
    std::string synonyms_path, model;
    int category_level = 1, dim = 512;
    double k1 = 1.2, b = 0.75;
    auto* index = app.add_subcommand("index", "build or load a persisted index");
    index->add_option("--store", store_dir, "store directory")->required();
    index->add_option("--data-level", data_level, "minimal|basic|advanced")
        ->check(CLI::IsMember({"minimal", "basic", "advanced"}));
    index->add_option("--category-level", category_level, "0..4")->check(CLI::Range(0, 4));
    index->add_option("--retriever", retriever, "dense|bm25")
        ->check(CLI::IsMember({"dense", "bm25"}));
    index->add_option("--provider", provider, "hashing|remote");
    index->add_option("--dim", dim, "embedding dimension");
    index->add_option("--synonyms", synonyms_path, "synonym table JSON (hashing provider)");
    index->add_option("--model", model, "remote embedding model name");
    index->add_option("--k1", k1, "BM25 k1");
    index->add_option("--b", b, "BM25 b");

    // search
    std::string config_path, query;
    bool as_json = false;
    auto* search = app.add_subcommand("search", "run one query through the pipeline");
    search->add_option("--store", store_dir, "store directory")->required();
    search->add_option("--config", config_path, "search config JSON")->required();
    search->add_option("query", query, "query text")->required();
    search->add_flag("--json", as_json, "emit the SearchOutcome as JSON");

    // eval / ablate
    std::string dataset_path, grid_path, supplement_path, eval_out;
    std::vector<int> ks;
    int workers = 4;
    bool zero_latency = false;
    auto add_eval_options = [&](CLI::App* cmd, bool grid_required) {
        cmd->add_option("--store", store_dir, "store directory")->required();
        cmd->add_option("--dataset", dataset_path, "dataset JSON-lines")->required();
        auto* grid_opt = cmd->add_option("--grid", grid_path, "grid JSON (array of configs)");
        if (grid_required) grid_opt->required();
        if (!grid_required) cmd->add_option("--config", config_path, "single config JSON");
        cmd->add_option("--supplement", supplement_path, "judgment supplement JSON");
        cmd->add_option("--out", eval_out, "output directory")->required();
        cmd->add_option("--k", ks, "report cutoffs (default 5 20)");
        cmd->add_option("--workers", workers, "parallel queries");
        cmd->add_flag("--zero-latency", zero_latency,
                      "report latency as 0 for byte-reproducible outputs");
    };
    auto* eval = app.add_subcommand("eval", "evaluate configs against a dataset");
    add_eval_options(eval, false);
    auto* ablate = app.add_subcommand("ablate", "run an ablation grid");
    add_eval_options(ablate, true);

    // synth
    std::string spec_path, synth_out;
    BenchSpec spec;
    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark");
    synth->add_option("--spec", spec_path, "benchmark spec JSON");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", spec.seed, "RNG seed");
    synth->add_option("--segments", spec.n_segments, "number of segments");
    synth->add_option("--fanout", spec.fanout, "children per node (levels 2-3)");
    synth->add_option("--classes", spec.n_commodity_classes, "number of commodity classes");
    synth->add_option("--products-per-class", spec.products_per_class, "products per class");
    synth->add_option("--queries-per-class", spec.queries_per_class, "queries per class");
    synth->add_option("--mismatch-rate", spec.mismatch_rate, "metadata-only query vocabulary rate");
    synth->add_option("--definition-rate", spec.definition_rate, "category definition coverage");
    synth->add_option("--keyword-rate", spec.keyword_rate, "category keyword coverage");

    // serve
    std::string listen = "127.0.0.1:8080";
    auto* serve = app.add_subcommand("serve", "HTTP search endpoint");
    serve->add_option("--store", store_dir, "store directory")->required();
    serve->add_option("--config", config_path, "search config JSON")->required();
    serve->add_option("--listen", listen, "host:port (port 0 picks a free port)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(ingest)) return cmd_ingest(taxonomy_path, catalog_path, out_dir);
        if (app.got_subcommand(index))
            return cmd_index(store_dir, data_level, category_level, retriever, provider, dim,
                             synonyms_path, model, k1, b);
        if (app.got_subcommand(search)) return cmd_search(store_dir, config_path, query, as_json);
        if (app.got_subcommand(eval) || app.got_subcommand(ablate))
            return cmd_eval(store_dir, dataset_path, grid_path, config_path, supplement_path,
                            eval_out, ks, workers, zero_latency);
        if (app.got_subcommand(synth)) return cmd_synth(spec_path, synth_out, spec, {});
        if (app.got_subcommand(serve)) return cmd_serve(store_dir, config_path, listen);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ProviderError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
