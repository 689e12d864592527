#include "taxsearch/rewrite.hpp"

#include "taxsearch/lexical.hpp"

namespace taxsearch {

const std::set<std::string>& RulesRewriter::default_stoplist() {
    static const std::set<std::string> stoplist = {
        "a",     "an",    "and",   "any",   "are",  "available", "be",    "can",   "could",
        "do",    "does",  "for",   "have",  "how",  "i",         "in",    "is",    "it",
        "many",  "may",   "me",    "might", "must", "of",        "on",    "or",    "our",
        "shall", "should","that",  "the",   "there","to",        "use",   "used",  "we",
        "what",  "when",  "where", "which", "who",  "whose",     "why",   "will",  "with",
        "would", "you",   "your",
    };
    return stoplist;
}

RulesRewriter::RulesRewriter() : stoplist_(default_stoplist()) {}

RulesRewriter::RulesRewriter(std::set<std::string> stoplist) : stoplist_(std::move(stoplist)) {}

std::string RulesRewriter::rewrite(const std::string& query) {
    auto tokens = tokenize(query);
    std::string out;
    for (const auto& t : tokens) {
        if (stoplist_.count(t)) continue;
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out.empty() ? query : out;
}

RewriteResult rewrite_query(QueryRewriter& rewriter, const std::string& query,
                            bool fallback_on_error) {
    if (query.find_first_not_of(" \t\r\n") == std::string::npos)
        throw UsageError("query must not be blank");

    RewriteResult result;
    try {
        result.query = rewriter.rewrite(query);
    } catch (const ProviderError&) {
        if (!fallback_on_error) throw;
        result.query = query;
        result.degraded = true;
        return result;
    }
    if (result.query.empty())
        throw ProviderError("rewriter '" + rewriter.name() + "' produced an empty query");
    return result;
}

} // namespace taxsearch
