#pragma once

#include <string>
#include <vector>

#include "taxsearch/dense.hpp"
#include "taxsearch/http_client.hpp"
#include "taxsearch/rerank.hpp"
#include "taxsearch/rewrite.hpp"

namespace taxsearch {

struct RemoteEndpoint {
    std::string url;     // full endpoint URL
    std::string model;
    std::string api_key;
    HttpRetryPolicy retry;
};

// Embeddings endpoint speaking the de facto wire shape:
//   POST {"model": ..., "input": [texts]}
//   -> {"data": [{"index": i, "embedding": [...]}, ...]}
// Texts are sent in batches of batch_size, up to `parallelism` batches in
// flight at once; results are reassembled in input order.
class RemoteEmbeddingProvider : public EmbeddingProvider {
public:
    RemoteEmbeddingProvider(RemoteEndpoint endpoint, int dimension, int batch_size = 16,
                            int parallelism = 4, std::string query_instruction = {},
                            std::string document_instruction = {});

    const std::string& name() const override { return name_; }
    int dimension() const override { return dimension_; }
    ProviderKind kind() const override { return ProviderKind::remote_http; }
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts,
                                       InputRole role) override;

private:
    std::string name_;
    RemoteEndpoint endpoint_;
    int dimension_;
    int batch_size_;
    int parallelism_;
    std::string query_instruction_;
    std::string document_instruction_;
};

// Rerank endpoint:
//   POST {"model": ..., "query": ..., "documents": [texts]}
//   -> {"results": [{"index": i, "relevance_score": s}, ...]}
class RemoteReranker : public Reranker {
public:
    explicit RemoteReranker(RemoteEndpoint endpoint);

    const std::string& name() const override { return name_; }
    RerankerKind kind() const override { return RerankerKind::remote_http; }
    std::vector<double> score(const std::string& query,
                              const std::vector<std::string>& documents) override;

private:
    std::string name_;
    RemoteEndpoint endpoint_;
};

// Chat-completions style rewrite endpoint:
//   POST {"model": ..., "messages": [{"role": "system", ...}, {"role": "user", ...}]}
//   -> {"choices": [{"message": {"content": ...}}]}
class RemoteRewriter : public QueryRewriter {
public:
    RemoteRewriter(RemoteEndpoint endpoint, std::string system_prompt);

    const std::string& name() const override { return name_; }
    RewriterKind kind() const override { return RewriterKind::remote_llm; }
    std::string rewrite(const std::string& query) override;

    static const std::string& default_system_prompt();

private:
    std::string name_;
    RemoteEndpoint endpoint_;
    std::string system_prompt_;
};

} // namespace taxsearch
