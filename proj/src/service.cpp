#include "taxsearch/service.hpp"

#include <httplib.h>

namespace taxsearch {

struct SearchService::Impl {
    std::shared_ptr<SearchEngine> engine;
    SearchConfig base_config;
    httplib::Server server;
};

SearchService::SearchService(std::shared_ptr<SearchEngine> engine, SearchConfig base_config)
    : impl_(std::make_unique<Impl>()) {
    impl_->engine = std::move(engine);
    impl_->base_config = std::move(base_config);
    validate_search_config(impl_->base_config);
}

SearchService::~SearchService() { stop(); }

OrderedJson SearchService::handle_search(const std::string& body) {
    Json request;
    try {
        request = Json::parse(body);
    } catch (const Json::parse_error& e) {
        throw UsageError(std::string("malformed request JSON: ") + e.what());
    }
    if (!request.is_object()) throw UsageError("request body must be a JSON object");
    for (const auto& [key, value] : request.items())
        if (key != "query" && key != "overrides")
            throw UsageError("unknown request field '" + key + "'");
    if (!request.contains("query") || !request["query"].is_string())
        throw UsageError("request requires a string 'query'");
    const std::string query = request["query"].get<std::string>();

    SearchConfig config = impl_->base_config;
    if (request.contains("overrides")) {
        const auto& overrides = request["overrides"];
        if (!overrides.is_object()) throw UsageError("'overrides' must be an object");
        for (const auto& [key, value] : overrides.items()) {
            if (key == "top_k") {
                config.top_k = value.get<int>();
            } else if (key == "final_k") {
                config.final_k = value.get<int>();
            } else if (key == "rerank") {
                config.rerank.enabled = value.get<bool>();
            } else {
                // index-affecting knobs deliberately rejected
                throw UsageError("override '" + key +
                                 "' not allowed (allowed: top_k, final_k, rerank)");
            }
        }
    }
    try {
        validate_search_config(config);
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }

    SearchOutcome outcome = impl_->engine->run_search(config, query);
    return outcome_to_json(outcome, &impl_->engine->catalog());
}

void SearchService::run(const std::string& host, int port,
                        const std::function<void(int)>& on_bound) {
    auto& server = impl_->server;

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });

    server.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            res.set_content(handle_search(req.body).dump(), "application/json");
        } catch (const UsageError& e) {
            res.status = 400;
            res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
        } catch (const DataError& e) {
            res.status = 400;
            res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
        } catch (const ProviderError& e) {
            res.status = 502;
            res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
        }
    });

    int bound = port;
    if (port == 0) {
        bound = server.bind_to_any_port(host);
        if (bound < 0) throw ProviderError("cannot bind " + host);
    } else {
        if (!server.bind_to_port(host, port))
            throw ProviderError("cannot bind " + host + ":" + std::to_string(port));
    }
    if (on_bound) on_bound(bound);
    server.listen_after_bind();
}

void SearchService::stop() {
    if (impl_) impl_->server.stop();
}

} // namespace taxsearch
