#include "taxsearch/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

namespace taxsearch {

namespace {

// Decodes one UTF-8 code point starting at i; advances i. Invalid bytes are
// returned as-is so they act as separators rather than aborting the scan.
char32_t decode_utf8(const std::string& s, std::size_t& i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
        ++i;
        return c;
    }
    int extra = 0;
    char32_t cp = 0;
    if ((c & 0xE0) == 0xC0) {
        cp = c & 0x1F;
        extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
        cp = c & 0x0F;
        extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
        cp = c & 0x07;
        extra = 3;
    } else {
        ++i;
        return c;
    }
    std::size_t j = i + 1;
    for (int k = 0; k < extra; ++k, ++j) {
        if (j >= s.size() || (static_cast<unsigned char>(s[j]) & 0xC0) != 0x80) {
            ++i;
            return c;
        }
        cp = (cp << 6) | (static_cast<unsigned char>(s[j]) & 0x3F);
    }
    i = j;
    return cp;
}

bool is_word_cp(char32_t cp) {
    if (cp < 0x80)
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    if (cp == 0xB5 || cp == 0xAA || cp == 0xBA) return true; // micro sign, ordinals
    if (cp == 0xB2 || cp == 0xB3 || cp == 0xB9) return true; // superscript digits (mm², m³)
    if (cp < 0xC0) return false;                             // Latin-1 punctuation block
    if (cp == 0xD7 || cp == 0xF7) return false;              // multiplication/division signs
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;          // punctuation, symbols, arrows
    if (cp >= 0x3000 && cp <= 0x303F) return false;          // CJK punctuation
    return true;
}

char32_t fold_case(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20; // Latin-1 capitals
    if (cp >= 0x100 && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp; // Latin Extended-A pairs
    if (cp >= 0x179 && cp <= 0x17D) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20; // Greek
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;                // Cyrillic
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

constexpr char kBm25Magic[8] = {'T', 'S', 'B', 'I', 'D', 'X', '\0', '\0'};
constexpr std::uint32_t kBm25Version = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& path) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw DataError("truncated index file: " + path);
    return value;
}

void write_string(std::ostream& out, const std::string& s) {
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const std::string& path) {
    auto len = read_raw<std::uint32_t>(in, path);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw DataError("truncated index file: " + path);
    return s;
}

} // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = decode_utf8(text, i);
        if (is_word_cp(cp)) {
            append_utf8(current, fold_case(cp));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Bm25Index Bm25Index::build(const std::vector<ComposedDocument>& docs, const Bm25Params& params) {
    Bm25Index index;
    index.params_ = params;
    index.doc_ids_.reserve(docs.size());
    index.doc_lengths_.reserve(docs.size());

    std::unordered_set<std::string> seen;
    std::uint64_t total_tokens = 0;
    for (const auto& doc : docs) {
        if (!seen.insert(doc.product_id).second)
            throw DataError("duplicate doc id '" + doc.product_id + "'");
        auto doc_index = static_cast<std::uint32_t>(index.doc_ids_.size());
        index.doc_ids_.push_back(doc.product_id);

        auto tokens = tokenize(doc.text);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_tokens += tokens.size();

        std::map<std::string, std::uint32_t> tf;
        for (auto& t : tokens) ++tf[t];
        for (auto& [term, freq] : tf)
            index.postings_[term].push_back(Posting{doc_index, freq});
    }
    index.avg_doc_length_ =
        docs.empty() ? 0.0 : static_cast<double>(total_tokens) / static_cast<double>(docs.size());
    return index;
}

std::vector<ScoredDoc> Bm25Index::search(const std::string& query, int top_k) const {
    if (top_k < 1) throw UsageError("top_k must be >= 1");
    if (doc_ids_.empty()) return {};

    auto terms = tokenize(query);
    if (params_.query_term_set_semantics) {
        std::set<std::string> uniq(terms.begin(), terms.end());
        terms.assign(uniq.begin(), uniq.end());
    }

    const double n = static_cast<double>(doc_ids_.size());
    std::vector<double> scores(doc_ids_.size(), 0.0);
    for (const auto& term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const auto& plist = it->second;
        const double df = static_cast<double>(plist.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const auto& posting : plist) {
            const double tf = static_cast<double>(posting.term_frequency);
            const double dl = static_cast<double>(doc_lengths_[posting.doc_index]);
            const double denom =
                tf + params_.k1 * (1.0 - params_.b + params_.b * dl / avg_doc_length_);
            scores[posting.doc_index] += idf * tf * (params_.k1 + 1.0) / denom;
        }
    }

    std::vector<std::uint32_t> hit;
    for (std::uint32_t i = 0; i < scores.size(); ++i)
        if (scores[i] > 0.0) hit.push_back(i);
    std::sort(hit.begin(), hit.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return doc_ids_[a] < doc_ids_[b];
    });
    if (hit.size() > static_cast<std::size_t>(top_k)) hit.resize(static_cast<std::size_t>(top_k));

    std::vector<ScoredDoc> out;
    out.reserve(hit.size());
    for (auto i : hit) out.push_back(ScoredDoc{doc_ids_[i], scores[i]});
    return out;
}

void Bm25Index::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write index file: " + path);
    out.write(kBm25Magic, sizeof(kBm25Magic));
    write_raw<std::uint32_t>(out, kBm25Version);
    write_raw<double>(out, params_.k1);
    write_raw<double>(out, params_.b);
    write_raw<std::uint8_t>(out, params_.query_term_set_semantics ? 1 : 0);
    write_raw<std::uint64_t>(out, doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        write_string(out, doc_ids_[i]);
        write_raw<std::uint32_t>(out, doc_lengths_[i]);
    }
    write_raw<std::uint64_t>(out, postings_.size());
    for (const auto& [term, plist] : postings_) {
        write_string(out, term);
        write_raw<std::uint64_t>(out, plist.size());
        for (const auto& posting : plist) {
            write_raw<std::uint32_t>(out, posting.doc_index);
            write_raw<std::uint32_t>(out, posting.term_frequency);
        }
    }
    if (!out) throw DataError("short write: " + path);
}

Bm25Index Bm25Index::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open index file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + 8, kBm25Magic))
        throw DataError("not a BM25 index file: " + path);
    auto version = read_raw<std::uint32_t>(in, path);
    if (version != kBm25Version)
        throw DataError("unsupported BM25 index version " + std::to_string(version) + ": " + path);

    Bm25Index index;
    index.params_.k1 = read_raw<double>(in, path);
    index.params_.b = read_raw<double>(in, path);
    index.params_.query_term_set_semantics = read_raw<std::uint8_t>(in, path) != 0;
    auto doc_count = read_raw<std::uint64_t>(in, path);
    index.doc_ids_.reserve(doc_count);
    index.doc_lengths_.reserve(doc_count);
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < doc_count; ++i) {
        index.doc_ids_.push_back(read_string(in, path));
        index.doc_lengths_.push_back(read_raw<std::uint32_t>(in, path));
        total += index.doc_lengths_.back();
    }
    index.avg_doc_length_ =
        doc_count == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(doc_count);
    auto term_count = read_raw<std::uint64_t>(in, path);
    for (std::uint64_t t = 0; t < term_count; ++t) {
        std::string term = read_string(in, path);
        auto posting_count = read_raw<std::uint64_t>(in, path);
        std::vector<Posting> plist;
        plist.reserve(posting_count);
        for (std::uint64_t p = 0; p < posting_count; ++p) {
            Posting posting;
            posting.doc_index = read_raw<std::uint32_t>(in, path);
            posting.term_frequency = read_raw<std::uint32_t>(in, path);
            if (posting.doc_index >= doc_count)
                throw DataError("corrupt postings in index file: " + path);
            plist.push_back(posting);
        }
        index.postings_.emplace(std::move(term), std::move(plist));
    }
    return index;
}

} // namespace taxsearch
