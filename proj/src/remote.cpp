#include "taxsearch/remote.hpp"

#include <atomic>
#include <cmath>
#include <future>
#include <limits>

namespace taxsearch {

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEndpoint endpoint, int dimension,
                                                 int batch_size, int parallelism,
                                                 std::string query_instruction,
                                                 std::string document_instruction)
    : name_("remote:" + endpoint.model),
      endpoint_(std::move(endpoint)),
      dimension_(dimension),
      batch_size_(batch_size),
      parallelism_(parallelism),
      query_instruction_(std::move(query_instruction)),
      document_instruction_(std::move(document_instruction)) {
    if (dimension_ < 1) throw UsageError("embedding dimension must be >= 1");
    if (batch_size_ < 1) throw UsageError("batch size must be >= 1");
    if (parallelism_ < 1) throw UsageError("parallelism must be >= 1");
}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::embed(const std::vector<std::string>& texts,
                                                            InputRole role) {
    if (texts.empty()) return {};
    const std::string& instruction =
        role == InputRole::query ? query_instruction_ : document_instruction_;

    std::vector<std::string> inputs;
    inputs.reserve(texts.size());
    for (const auto& text : texts)
        inputs.push_back(instruction.empty() ? text : instruction + text);

    const std::size_t batch_count =
        (inputs.size() + static_cast<std::size_t>(batch_size_) - 1) /
        static_cast<std::size_t>(batch_size_);
    std::vector<EmbeddingVector> out(inputs.size());

    auto run_batch = [&](std::size_t batch) {
        const std::size_t begin = batch * static_cast<std::size_t>(batch_size_);
        const std::size_t end = std::min(begin + static_cast<std::size_t>(batch_size_),
                                         inputs.size());
        Json body;
        body["model"] = endpoint_.model;
        body["input"] = Json::array();
        for (std::size_t i = begin; i < end; ++i) body["input"].push_back(inputs[i]);

        Json response = post_json(endpoint_.url, body, endpoint_.retry, endpoint_.api_key);
        if (!response.is_object() || !response.contains("data") || !response["data"].is_array())
            throw ProviderError("embedding endpoint returned no 'data' array");
        const auto& data = response["data"];
        if (data.size() != end - begin)
            throw ProviderError("embedding endpoint returned " + std::to_string(data.size()) +
                                " vectors for a batch of " + std::to_string(end - begin));
        for (const auto& item : data) {
            if (!item.contains("index") || !item.contains("embedding"))
                throw ProviderError("embedding endpoint item missing 'index' or 'embedding'");
            auto idx = item["index"].get<std::size_t>();
            if (idx >= end - begin)
                throw ProviderError("embedding endpoint returned out-of-range index");
            const auto& emb = item["embedding"];
            if (!emb.is_array() || static_cast<int>(emb.size()) != dimension_)
                throw ProviderError("embedding endpoint returned a vector of length " +
                                    std::to_string(emb.size()) + ", expected " +
                                    std::to_string(dimension_));
            EmbeddingVector v;
            v.reserve(emb.size());
            for (const auto& x : emb) v.push_back(x.get<float>());
            out[begin + idx] = std::move(v);
        }
    };

    const int workers = std::min<int>(parallelism_, static_cast<int>(batch_count));
    if (workers <= 1) {
        for (std::size_t b = 0; b < batch_count; ++b) run_batch(b);
        return out;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> futures;
    futures.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&] {
            while (true) {
                std::size_t b = next.fetch_add(1);
                if (b >= batch_count) return;
                run_batch(b);
            }
        }));
    }
    std::exception_ptr first_error;
    for (auto& f : futures) {
        try {
            f.get();
        } catch (...) {
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

RemoteReranker::RemoteReranker(RemoteEndpoint endpoint)
    : name_("remote:" + endpoint.model), endpoint_(std::move(endpoint)) {}

std::vector<double> RemoteReranker::score(const std::string& query,
                                          const std::vector<std::string>& documents) {
    Json body;
    body["model"] = endpoint_.model;
    body["query"] = query;
    body["documents"] = documents;

    Json response = post_json(endpoint_.url, body, endpoint_.retry, endpoint_.api_key);
    if (!response.is_object() || !response.contains("results") ||
        !response["results"].is_array())
        throw ProviderError("rerank endpoint returned no 'results' array");
    const auto& results = response["results"];
    if (results.size() != documents.size())
        throw ProviderError("rerank endpoint returned " + std::to_string(results.size()) +
                            " scores for " + std::to_string(documents.size()) + " documents");

    std::vector<double> scores(documents.size(),
                               std::numeric_limits<double>::quiet_NaN());
    for (const auto& item : results) {
        if (!item.contains("index") || !item.contains("relevance_score"))
            throw ProviderError("rerank endpoint item missing 'index' or 'relevance_score'");
        auto idx = item["index"].get<std::size_t>();
        if (idx >= documents.size())
            throw ProviderError("rerank endpoint returned out-of-range index");
        scores[idx] = item["relevance_score"].get<double>();
    }
    for (double s : scores)
        if (std::isnan(s)) throw ProviderError("rerank endpoint left a document unscored");
    return scores;
}

const std::string& RemoteRewriter::default_system_prompt() {
    // Versioned alongside the repo under config/rewrite_prompt.txt; keep the
    // two in sync.
    static const std::string prompt =
        "Rewrite the user's product search question as a short keyword query. "
        "Keep only catalog-relevant terms: product type, technology, attribute "
        "names and values. Drop filler words, greetings and question phrasing. "
        "Respond with the rewritten query only, no explanation. (template v1)";
    return prompt;
}

RemoteRewriter::RemoteRewriter(RemoteEndpoint endpoint, std::string system_prompt)
    : name_("remote:" + endpoint.model),
      endpoint_(std::move(endpoint)),
      system_prompt_(std::move(system_prompt)) {
    if (system_prompt_.empty()) system_prompt_ = default_system_prompt();
}

std::string RemoteRewriter::rewrite(const std::string& query) {
    Json body;
    body["model"] = endpoint_.model;
    body["messages"] = Json::array({Json{{"role", "system"}, {"content", system_prompt_}},
                                    Json{{"role", "user"}, {"content", query}}});

    Json response = post_json(endpoint_.url, body, endpoint_.retry, endpoint_.api_key);
    try {
        std::string content = response.at("choices").at(0).at("message").at("content");
        auto begin = content.find_first_not_of(" \t\r\n");
        if (begin == std::string::npos)
            throw ProviderError("rewrite endpoint returned an empty rewrite");
        auto end = content.find_last_not_of(" \t\r\n");
        return content.substr(begin, end - begin + 1);
    } catch (const Json::exception&) {
        throw ProviderError("rewrite endpoint returned an unexpected response shape");
    }
}

} // namespace taxsearch
