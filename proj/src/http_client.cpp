#include "taxsearch/http_client.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>

namespace taxsearch {

namespace {

struct SplitUrl {
    std::string base; // scheme://host:port
    std::string path; // /v1/embeddings
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ProviderError("invalid endpoint URL (missing scheme): " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

} // namespace

Json post_json(const std::string& url, const Json& body, const HttpRetryPolicy& policy,
               const std::string& api_key) {
    auto [base, path] = split_url(url);
    httplib::Client client(base);
    client.set_connection_timeout(policy.timeout_sec, 0);
    client.set_read_timeout(policy.timeout_sec, 0);
    client.set_write_timeout(policy.timeout_sec, 0);

    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    const std::string payload = body.dump();
    std::string last_error;
    int backoff_ms = policy.initial_backoff_ms;
    for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
        auto res = client.Post(path, headers, payload, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            try {
                return Json::parse(res->body);
            } catch (const Json::parse_error& e) {
                throw ProviderError("endpoint " + url + " returned invalid JSON: " + e.what());
            }
        }
        if (res && !retryable_status(res->status))
            throw ProviderError("endpoint " + url + " returned HTTP " +
                                std::to_string(res->status) + ": " + res->body);
        last_error = res ? "HTTP " + std::to_string(res->status)
                         : "transport error (" + httplib::to_string(res.error()) + ")";
        if (attempt < policy.max_attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms = std::min(backoff_ms * 2, policy.max_backoff_ms);
        }
    }
    throw ProviderError("endpoint " + url + " failed after " +
                        std::to_string(policy.max_attempts) + " attempts: " + last_error);
}

} // namespace taxsearch
