#include "adaqr/cost.hpp"

#include <fstream>

#include <json.hpp>

#include "adaqr/errors.hpp"

namespace adaqr {

CostUnit cost_unit_from_string(const std::string& s) {
    if (s == "completion_tokens") return CostUnit::completion_tokens;
    if (s == "total_tokens") return CostUnit::total_tokens;
    if (s == "fixed_per_call") return CostUnit::fixed_per_call;
    throw_validation("unknown cost unit '" + s +
                     "' (expected completion_tokens, total_tokens, fixed_per_call)");
}

std::string to_string(CostUnit u) {
    switch (u) {
        case CostUnit::completion_tokens: return "completion_tokens";
        case CostUnit::total_tokens: return "total_tokens";
        default: return "fixed_per_call";
    }
}

CostLedger accumulate_cost(const std::vector<RoutingDecision>& decisions,
                           const std::map<std::string, RewriteResult>& rewrites,
                           CostUnit unit) {
    CostLedger ledger;
    ledger.unit = unit;
    for (const auto& d : decisions) {
        if (d.path == RoutePath::dense) {
            ledger.per_query[d.query_id] = 0.0;
            continue;
        }
        auto it = rewrites.find(d.query_id);
        if (it == rewrites.end()) {
            throw_validation("accumulate_cost: query '" + d.query_id +
                             "' routed to llm but has no rewrite result");
        }
        double cost = 0.0;
        switch (unit) {
            case CostUnit::completion_tokens:
                cost = static_cast<double>(it->second.completion_tokens);
                break;
            case CostUnit::total_tokens:
                cost = static_cast<double>(it->second.prompt_tokens +
                                           it->second.completion_tokens);
                break;
            case CostUnit::fixed_per_call:
                cost = 1.0;
                break;
        }
        ledger.per_query[d.query_id] = cost;
        ledger.total += cost;
    }
    return ledger;
}

double savings_vs_all_llm(const CostLedger& ledger, double total_all_llm) {
    if (total_all_llm <= 0.0) {
        throw_validation("savings_vs_all_llm: all-LLM baseline total must be > 0");
    }
    return 1.0 - ledger.total / total_all_llm;
}

void write_cost_ledger_json(const CostLedger& ledger, double total_all_llm,
                            const std::string& path) {
    nlohmann::json j;
    j["unit"] = to_string(ledger.unit);
    j["total"] = ledger.total;
    j["all_llm_total"] = total_all_llm;
    j["savings"] = savings_vs_all_llm(ledger, total_all_llm);
    j["per_query"] = ledger.per_query;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw_io("write failed: " + path);
}

} // namespace adaqr
