#pragma once

#include <set>
#include <string>
#include <vector>

#include "taxsearch/common.hpp"

namespace taxsearch {

enum class RewriterKind { remote_llm, passthrough, rules_offline };

class QueryRewriter {
public:
    virtual ~QueryRewriter() = default;
    virtual const std::string& name() const = 0;
    virtual RewriterKind kind() const = 0;
    virtual std::string rewrite(const std::string& query) = 0;
};

class PassthroughRewriter : public QueryRewriter {
public:
    const std::string& name() const override { return name_; }
    RewriterKind kind() const override { return RewriterKind::passthrough; }
    std::string rewrite(const std::string& query) override { return query; }

private:
    std::string name_ = "passthrough";
};

// Drops stoplisted tokens (interrogatives, auxiliaries) and keeps the rest in
// order. If everything is stoplisted the original query is returned, so the
// output is never empty.
class RulesRewriter : public QueryRewriter {
public:
    RulesRewriter(); // default stoplist
    explicit RulesRewriter(std::set<std::string> stoplist);

    const std::string& name() const override { return name_; }
    RewriterKind kind() const override { return RewriterKind::rules_offline; }
    std::string rewrite(const std::string& query) override;

    static const std::set<std::string>& default_stoplist();

private:
    std::string name_ = "rules";
    std::set<std::string> stoplist_;
};

struct RewriteResult {
    std::string query;
    // True when a remote rewriter failed and the input passed through
    // unchanged.
    bool degraded = false;
};

// Blank input is an error. Remote failures fall back to the original query
// with the degraded flag set when fallback_on_error is true.
RewriteResult rewrite_query(QueryRewriter& rewriter, const std::string& query,
                            bool fallback_on_error = true);

} // namespace taxsearch
