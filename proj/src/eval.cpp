#include "adaqr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "adaqr/errors.hpp"

namespace adaqr {

namespace {

double gain(int rel) { return std::pow(2.0, static_cast<double>(rel)) - 1.0; }

double discount(size_t rank_1based) {
    return std::log2(static_cast<double>(rank_1based) + 1.0);
}

} // namespace

double dcg_at_k(const RankedList& ranked, const RelevanceJudgments& judgments, size_t k) {
    auto q = judgments.entries.find(ranked.query_id);
    if (q == judgments.entries.end()) {
        throw_validation("dcg: query '" + ranked.query_id + "' absent from judgments");
    }
    double dcg = 0.0;
    size_t n = std::min(k, ranked.items.size());
    for (size_t i = 0; i < n; ++i) {
        auto d = q->second.find(ranked.items[i].doc_id);
        int rel = d == q->second.end() ? 0 : d->second;
        dcg += gain(rel) / discount(i + 1);
    }
    return dcg;
}

double ideal_dcg_at_k(const RelevanceJudgments& judgments, const std::string& query_id,
                      size_t k) {
    auto q = judgments.entries.find(query_id);
    if (q == judgments.entries.end()) {
        throw_validation("idcg: query '" + query_id + "' absent from judgments");
    }
    std::vector<int> grades;
    grades.reserve(q->second.size());
    for (const auto& [did, g] : q->second) grades.push_back(g);
    std::sort(grades.begin(), grades.end(), std::greater<int>());
    double idcg = 0.0;
    size_t n = std::min(k, grades.size());
    for (size_t i = 0; i < n; ++i) {
        idcg += gain(grades[i]) / discount(i + 1);
    }
    return idcg;
}

double ndcg_at_k(const RankedList& ranked, const RelevanceJudgments& judgments, size_t k) {
    if (k < 1) throw_validation("ndcg: k must be >= 1");
    double idcg = ideal_dcg_at_k(judgments, ranked.query_id, k);
    if (idcg == 0.0) {
        throw_validation("ndcg: query '" + ranked.query_id +
                         "' has no relevant judged documents (zero IDCG)");
    }
    return dcg_at_k(ranked, judgments, k) / idcg;
}

EvalReport evaluate(const std::vector<RankedList>& ranked_lists,
                    const RelevanceJudgments& judgments, size_t k,
                    const std::map<std::string, std::string>& tags) {
    if (k < 1) throw_validation("evaluate: k must be >= 1");
    EvalReport report;
    report.k = k;

    std::map<std::string, std::pair<double, size_t>> tag_acc; // sum, count
    double sum = 0.0;
    for (const auto& ranked : ranked_lists) {
        double idcg = ideal_dcg_at_k(judgments, ranked.query_id, k);
        if (idcg == 0.0) {
            std::cerr << "warning: query '" << ranked.query_id
                      << "' has zero IDCG, excluded from evaluation\n";
            ++report.excluded_zero_idcg;
            continue;
        }
        double value = dcg_at_k(ranked, judgments, k) / idcg;
        report.per_query[ranked.query_id] = value;
        sum += value;
        auto t = tags.find(ranked.query_id);
        if (t != tags.end() && !t->second.empty()) {
            auto& acc = tag_acc[t->second];
            acc.first += value;
            acc.second += 1;
        }
    }
    if (!report.per_query.empty()) {
        report.mean_ndcg = sum / static_cast<double>(report.per_query.size());
    }
    for (const auto& [tag, acc] : tag_acc) {
        report.per_tag[tag] = acc.first / static_cast<double>(acc.second);
    }
    return report;
}

void write_eval_report_text(const EvalReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path + " for writing");
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        return std::string(buf);
    };
    out << "k " << report.k << "\n";
    out << "mean_ndcg " << fmt(report.mean_ndcg) << "\n";
    out << "queries " << report.per_query.size() << "\n";
    out << "excluded_zero_idcg " << report.excluded_zero_idcg << "\n";
    for (const auto& [tag, v] : report.per_tag) {
        out << "tag." << tag << " " << fmt(v) << "\n";
    }
    for (const auto& [qid, v] : report.per_query) {
        out << "query." << qid << " " << fmt(v) << "\n";
    }
    if (!out) throw_io("write failed: " + path);
}

void write_eval_report_json(const EvalReport& report, const std::string& path) {
    nlohmann::json j;
    j["k"] = report.k;
    j["mean_ndcg"] = report.mean_ndcg;
    j["excluded_zero_idcg"] = report.excluded_zero_idcg;
    j["per_query"] = report.per_query;
    j["per_tag"] = report.per_tag;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw_io("write failed: " + path);
}

} // namespace adaqr
