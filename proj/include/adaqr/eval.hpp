#pragma once

#include <map>
#include <string>
#include <vector>

#include "adaqr/records.hpp"
#include "adaqr/retrieval.hpp"

namespace adaqr {

struct EvalReport {
    std::map<std::string, double> per_query; // nDCG@k per included query
    double mean_ndcg = 0.0;
    size_t k = 0;
    std::map<std::string, double> per_tag;   // mean nDCG@k per dataset tag
    size_t excluded_zero_idcg = 0;           // queries dropped from the mean
};

// DCG@k with gain (2^rel - 1) / log2(rank + 1), over at most the first k
// retrieved items; unjudged documents contribute rel = 0.
double dcg_at_k(const RankedList& ranked, const RelevanceJudgments& judgments, size_t k);

// Ideal DCG@k over all judged documents for the query (truncated to k).
double ideal_dcg_at_k(const RelevanceJudgments& judgments, const std::string& query_id,
                      size_t k);

// DCG@k / IDCG@k. Errors: query absent from judgments, k < 1, and
// zero IDCG (no relevant documents judged for the query).
double ndcg_at_k(const RankedList& ranked, const RelevanceJudgments& judgments, size_t k);

// Macro means over queries. `tags` (query-id -> dataset tag) feeds the
// per-tag breakdown and may be empty. Queries with zero IDCG are excluded
// from all means with a warning; the count is reported.
EvalReport evaluate(const std::vector<RankedList>& ranked_lists,
                    const RelevanceJudgments& judgments, size_t k,
                    const std::map<std::string, std::string>& tags = {});

// Flat key-value text report plus a machine-readable JSON record.
void write_eval_report_text(const EvalReport& report, const std::string& path);
void write_eval_report_json(const EvalReport& report, const std::string& path);

} // namespace adaqr
