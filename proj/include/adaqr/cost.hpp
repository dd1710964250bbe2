#pragma once

#include <map>
#include <string>
#include <vector>

#include "adaqr/llm_client.hpp"
#include "adaqr/router.hpp"

namespace adaqr {

enum class CostUnit { completion_tokens, total_tokens, fixed_per_call };

CostUnit cost_unit_from_string(const std::string& s);
std::string to_string(CostUnit u);

struct CostLedger {
    std::map<std::string, double> per_query;
    double total = 0.0;
    CostUnit unit = CostUnit::completion_tokens;
};

// Dense-routed queries cost exactly 0; llm-routed queries cost per the
// chosen unit and must have a RewriteResult. total is the exact sum of the
// per-query entries.
CostLedger accumulate_cost(const std::vector<RoutingDecision>& decisions,
                           const std::map<std::string, RewriteResult>& rewrites,
                           CostUnit unit);

// 1 - total / total_all_llm, the relative savings vs rewriting everything.
double savings_vs_all_llm(const CostLedger& ledger, double total_all_llm);

void write_cost_ledger_json(const CostLedger& ledger, double total_all_llm,
                            const std::string& path);

} // namespace adaqr
