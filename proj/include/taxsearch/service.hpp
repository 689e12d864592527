#pragma once

#include <functional>
#include <memory>
#include <string>

#include "taxsearch/pipeline.hpp"

namespace taxsearch {

// HTTP facade over a SearchEngine:
//   GET  /health            -> 200 "ok"
//   POST /search {query, overrides?} -> SearchOutcome JSON
// Overrides are restricted to query-time-safe knobs: top_k, final_k, rerank.
class SearchService {
public:
    SearchService(std::shared_ptr<SearchEngine> engine, SearchConfig base_config);
    ~SearchService();

    SearchService(const SearchService&) = delete;
    SearchService& operator=(const SearchService&) = delete;

    // Request-body handler used by the HTTP route; throws UsageError or
    // DataError for malformed requests (mapped to 400 by the server).
    OrderedJson handle_search(const std::string& body);

    // Binds host:port (port 0 picks a free one), reports the bound port via
    // on_bound, then serves until stop(). In-flight requests finish before
    // stop() returns control to the listener.
    void run(const std::string& host, int port, const std::function<void(int)>& on_bound = {});
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace taxsearch
