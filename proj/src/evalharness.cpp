#include "taxsearch/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <mutex>
#include <sstream>
#include <unordered_set>

namespace taxsearch {

const char* to_string(Cohort cohort) {
    switch (cohort) {
        case Cohort::expert: return "expert";
        case Cohort::trainee: return "trainee";
    }
    throw DataError("invalid cohort");
}

Cohort parse_cohort(const std::string& name) {
    if (name == "expert") return Cohort::expert;
    if (name == "trainee") return Cohort::trainee;
    throw DataError("unknown cohort '" + name + "' (expected expert|trainee)");
}

Dataset load_dataset(std::istream& source, const Catalog& catalog) {
    Dataset dataset;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json obj;
        try {
            obj = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed sample JSON: " +
                            e.what());
        }
        const std::string where = "line " + std::to_string(line_no);
        EvalSample sample;
        if (!obj.contains("query_id") || !obj["query_id"].is_string())
            throw DataError(where + ": missing query_id");
        sample.query_id = obj["query_id"].get<std::string>();
        if (!obj.contains("query_text") || !obj["query_text"].is_string())
            throw DataError(where + ": missing query_text");
        sample.query_text = obj["query_text"].get<std::string>();
        if (!obj.contains("relevant_ids") || !obj["relevant_ids"].is_array())
            throw DataError(where + ": missing relevant_ids array");
        for (const auto& id : obj["relevant_ids"]) {
            if (!id.is_string()) throw DataError(where + ": relevant id must be a string");
            std::string value = id.get<std::string>();
            if (!catalog.find(value))
                throw DataError(where + ": sample '" + sample.query_id +
                                "' references unknown product '" + value + "'");
            sample.relevant_ids.insert(std::move(value));
        }
        if (sample.relevant_ids.empty())
            throw DataError(where + ": sample '" + sample.query_id + "' has no relevant ids");
        if (!obj.contains("cohort") || !obj["cohort"].is_string())
            throw DataError(where + ": missing cohort");
        sample.cohort = parse_cohort(obj["cohort"].get<std::string>());
        if (!seen.insert(sample.query_id).second)
            throw DataError(where + ": duplicate query_id '" + sample.query_id + "'");
        dataset.push_back(std::move(sample));
    }
    if (dataset.empty()) throw DataError("no samples in dataset");
    return dataset;
}

JudgmentSupplement load_supplement(std::istream& source, const Catalog& catalog) {
    Json obj;
    try {
        obj = Json::parse(source);
    } catch (const Json::parse_error& e) {
        throw DataError(std::string("malformed supplement JSON: ") + e.what());
    }
    if (!obj.is_object()) throw DataError("supplement must be a JSON object");
    JudgmentSupplement supplement;
    for (const auto& [query_id, ids] : obj.items()) {
        if (!ids.is_array())
            throw DataError("supplement entry '" + query_id + "' must be an array of ids");
        std::set<std::string> set;
        for (const auto& id : ids) {
            if (!id.is_string())
                throw DataError("supplement entry '" + query_id + "' contains a non-string id");
            std::string value = id.get<std::string>();
            if (!catalog.find(value))
                throw DataError("supplement entry '" + query_id +
                                "' references unknown product '" + value + "'");
            set.insert(std::move(value));
        }
        supplement.emplace(query_id, std::move(set));
    }
    return supplement;
}

Dataset merge_judgments(const Dataset& dataset, const JudgmentSupplement& supplement) {
    std::unordered_set<std::string> known;
    for (const auto& sample : dataset) known.insert(sample.query_id);
    for (const auto& [query_id, ids] : supplement)
        if (!known.count(query_id))
            throw DataError("supplement references unknown query_id '" + query_id + "'");

    Dataset merged = dataset;
    for (auto& sample : merged) {
        auto it = supplement.find(sample.query_id);
        if (it == supplement.end()) continue;
        sample.relevant_ids.insert(it->second.begin(), it->second.end());
    }
    return merged;
}

OrderedJson taxonomy_to_json(const Taxonomy& taxonomy) {
    OrderedJson out;
    OrderedJson list = OrderedJson::array();
    for (const auto& [id, cat] : taxonomy.categories()) {
        OrderedJson entry;
        entry["id"] = cat.id;
        entry["level"] = cat.level;
        entry["name"] = cat.name;
        if (cat.definition) entry["definition"] = *cat.definition;
        if (!cat.keywords.empty()) entry["keywords"] = cat.keywords;
        if (cat.parent_id) entry["parent_id"] = *cat.parent_id;
        list.push_back(std::move(entry));
    }
    out["categories"] = std::move(list);
    return out;
}

OrderedJson product_to_json(const Product& product) {
    OrderedJson entry;
    entry["article_number"] = product.article_number;
    entry["name"] = product.name;
    entry["short_description"] = product.short_description;
    entry["commodity_class_id"] = product.commodity_class_id;
    OrderedJson attrs = OrderedJson::object();
    for (const auto& [key, value] : product.attributes) attrs[key] = value;
    entry["attributes"] = std::move(attrs);
    entry["basic_attribute_names"] =
        std::vector<std::string>(product.basic_attribute_names.begin(),
                                 product.basic_attribute_names.end());
    return entry;
}

std::string products_to_jsonl(const std::vector<Product>& products) {
    std::string out;
    for (const auto& product : products) {
        out += product_to_json(product).dump();
        out += '\n';
    }
    return out;
}

std::string dataset_to_jsonl(const Dataset& dataset) {
    std::string out;
    for (const auto& sample : dataset) {
        OrderedJson entry;
        entry["query_id"] = sample.query_id;
        entry["query_text"] = sample.query_text;
        entry["relevant_ids"] =
            std::vector<std::string>(sample.relevant_ids.begin(), sample.relevant_ids.end());
        entry["cohort"] = to_string(sample.cohort);
        out += entry.dump();
        out += '\n';
    }
    return out;
}

MetricReport run_experiment(SearchEngine& engine, const std::vector<SearchConfig>& grid,
                            const Dataset& dataset, int k, int workers,
                            const OutcomeSink& sink) {
    if (k < 1) throw UsageError("report k must be >= 1");
    if (workers < 1) throw UsageError("workers must be >= 1");
    if (dataset.empty()) throw DataError("run_experiment: empty dataset");

    MetricReport report;
    report.k = k;
    for (const auto& config : grid) {
        std::vector<SearchOutcome> outcomes(dataset.size());
        auto run_one = [&](std::size_t i) {
            const auto& sample = dataset[i];
            outcomes[i] = engine.run_search(config, sample.query_text, sample.query_id);
        };
        if (workers == 1 || dataset.size() < 2) {
            for (std::size_t i = 0; i < dataset.size(); ++i) run_one(i);
        } else {
            std::atomic<std::size_t> next{0};
            std::exception_ptr error;
            std::mutex error_mutex;
            std::vector<std::future<void>> futures;
            const int n_workers = std::min<int>(workers, static_cast<int>(dataset.size()));
            for (int w = 0; w < n_workers; ++w) {
                futures.push_back(std::async(std::launch::async, [&] {
                    while (true) {
                        std::size_t i = next.fetch_add(1);
                        if (i >= dataset.size()) return;
                        try {
                            run_one(i);
                        } catch (...) {
                            std::lock_guard lock(error_mutex);
                            if (!error) error = std::current_exception();
                            return;
                        }
                    }
                }));
            }
            for (auto& f : futures) f.get();
            if (error) std::rethrow_exception(error);
        }

        if (sink)
            for (std::size_t i = 0; i < dataset.size(); ++i) sink(config, outcomes[i]);

        for (Cohort cohort : {Cohort::expert, Cohort::trainee}) {
            std::vector<MetricVector> per_query;
            double latency_sum = 0.0;
            std::string fingerprint;
            for (std::size_t i = 0; i < dataset.size(); ++i) {
                if (dataset[i].cohort != cohort) continue;
                RankedResult result;
                result.query_id = dataset[i].query_id;
                for (const auto& item : outcomes[i].results) result.ids.push_back(item.doc_id);
                Judgment judgment{dataset[i].query_id, dataset[i].relevant_ids};
                per_query.push_back(compute_metrics(result, judgment, k));
                latency_sum += outcomes[i].timings.total_ms;
                fingerprint = outcomes[i].config_fingerprint;
            }
            if (per_query.empty()) continue;
            ReportRow row;
            row.fingerprint = fingerprint;
            row.cohort = cohort;
            row.metrics = aggregate(per_query);
            row.mean_latency_ms = latency_sum / static_cast<double>(per_query.size());
            row.query_count = static_cast<int>(per_query.size());
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

namespace {

std::vector<std::string> metric_header(int k) {
    const std::string ks = std::to_string(k);
    return {"fingerprint",      "cohort",
            "hit_rate@" + ks,   "hits@" + ks,
            "mrr",              "recall",
            "r_precision",      "precision@" + ks,
            "r_precision@" + ks, "mean_latency_ms",
            "n"};
}

} // namespace

std::string emit_report(const MetricReport& report, ReportFormat format) {
    auto header = metric_header(report.k);
    auto row_fields = [](const ReportRow& row) {
        return std::vector<std::string>{
            row.fingerprint,
            to_string(row.cohort),
            format_double(row.metrics.hit_rate_at_k),
            format_double(row.metrics.hits_at_k),
            format_double(row.metrics.mrr),
            format_double(row.metrics.recall),
            format_double(row.metrics.r_precision),
            format_double(row.metrics.precision_at_k),
            format_double(row.metrics.r_precision_at_k),
            format_double(row.mean_latency_ms),
            std::to_string(row.query_count),
        };
    };

    std::string out;
    if (format == ReportFormat::csv) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out += ',';
            out += header[i];
        }
        out += '\n';
        for (const auto& row : report.rows) {
            auto fields = row_fields(row);
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (i) out += ',';
                out += fields[i];
            }
            out += '\n';
        }
        return out;
    }

    auto emit_md_row = [&out](const std::vector<std::string>& fields) {
        out += '|';
        for (const auto& f : fields) {
            out += ' ';
            out += f;
            out += " |";
        }
        out += '\n';
    };
    emit_md_row(header);
    std::vector<std::string> rule(header.size(), "---");
    emit_md_row(rule);
    for (const auto& row : report.rows) emit_md_row(row_fields(row));
    return out;
}

MetricReport parse_report_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty report CSV");

    auto split = [](const std::string& s) {
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(s);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        return fields;
    };
    auto header = split(line);
    if (header.size() != 11 || header[0] != "fingerprint")
        throw DataError("unexpected report CSV header");
    auto at_pos = header[2].find('@');
    if (at_pos == std::string::npos) throw DataError("unexpected report CSV header");

    MetricReport report;
    report.k = std::stoi(header[2].substr(at_pos + 1));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split(line);
        if (fields.size() != 11) throw DataError("bad report CSV row: " + line);
        ReportRow row;
        row.fingerprint = fields[0];
        row.cohort = parse_cohort(fields[1]);
        row.metrics.k = report.k;
        row.metrics.hit_rate_at_k = std::stod(fields[2]);
        row.metrics.hits_at_k = std::stod(fields[3]);
        row.metrics.mrr = std::stod(fields[4]);
        row.metrics.recall = std::stod(fields[5]);
        row.metrics.r_precision = std::stod(fields[6]);
        row.metrics.precision_at_k = std::stod(fields[7]);
        row.metrics.r_precision_at_k = std::stod(fields[8]);
        row.mean_latency_ms = std::stod(fields[9]);
        row.query_count = std::stoi(fields[10]);
        report.rows.push_back(std::move(row));
    }
    return report;
}

} // namespace taxsearch
