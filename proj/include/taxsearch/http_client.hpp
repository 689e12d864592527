#pragma once

#include <string>

#include "taxsearch/common.hpp"

namespace taxsearch {

struct HttpRetryPolicy {
    int max_attempts = 3;
    int initial_backoff_ms = 50;
    int max_backoff_ms = 1000;
    int timeout_sec = 60;
};

// POSTs a JSON body and returns the parsed JSON response. Transient failures
// (connection errors, 5xx, 429) are retried with exponential backoff; after
// max_attempts a ProviderError is thrown. `url` is a full endpoint URL, e.g.
// "http://127.0.0.1:8080/v1/embeddings". A non-empty api_key is sent as a
// bearer token.
Json post_json(const std::string& url, const Json& body,
               const HttpRetryPolicy& policy = {}, const std::string& api_key = {});

} // namespace taxsearch
