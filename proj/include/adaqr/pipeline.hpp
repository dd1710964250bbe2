#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adaqr/cost.hpp"
#include "adaqr/eval.hpp"
#include "adaqr/llm_client.hpp"
#include "adaqr/mapper.hpp"
#include "adaqr/records.hpp"
#include "adaqr/router.hpp"
#include "adaqr/train.hpp"

namespace adaqr {

struct PipelineConfig {
    std::string queries_path;
    std::string corpus_path;
    std::string qrels_path;
    std::string pairs_path;     // external pre-training pairs
    std::string checkpoint_dir = "checkpoints";
    std::string cache_dir = "cache";
    std::string output_dir = "out";
    std::string anchor_path;    // default: <checkpoint_dir>/anchor.bin

    TrainConfig pretrain;
    TrainConfig finetune;
    std::optional<uint64_t> pretrain_seed_override;
    std::optional<uint64_t> finetune_seed_override;
    RouterConfig router;
    Similarity retrieval_similarity = Similarity::cosine;
    double epsilon = 0.0;       // oracle-set comparability slack

    LlmEndpointConfig llm;
    EmbedConfig embedder;
    size_t llm_in_flight = 4;
    bool rewrite_force = false;

    size_t eval_k = 10;
    uint64_t seed = 7;
    double split_fraction = 0.7;
    bool output_tanh = false;
    CostUnit cost_unit = CostUnit::fixed_per_call;
    std::string run_tag = "adaqr";
};

PipelineConfig default_pipeline_config();

// Flat key-value config file: one `key value` (or `key=value`) per line,
// `#` comments. Unknown keys are an error. Returns defaults when path is
// empty.
PipelineConfig load_pipeline_config(const std::string& path);
void apply_config_entry(PipelineConfig& config, const std::string& key,
                        const std::string& value);

// Named tau profiles (empirical per-retriever defaults).
double tau_profile(const std::string& name);

// Stratified-by-tag 70/30 split; a pure function of (ids, tags, seed).
// Tags with a single query go to the train side.
struct SplitResult {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};
SplitResult split_queries(const std::vector<QueryRecord>& records, double train_fraction,
                          uint64_t seed);

std::vector<QueryRecord> filter_records(const std::vector<QueryRecord>& records,
                                        const std::vector<std::string>& ids);

// --- command drivers -------------------------------------------------

// Pretrain on the external pairs file, then finetune on the train side of
// the query split. Writes pretrain.ckpt / finetune.ckpt (+ .meta, +
// .report.json) under checkpoint_dir.
struct TrainOutputs {
    MapperParams pretrained;
    MapperParams finetuned;
    TrainReport pretrain_report;
    TrainReport finetune_report;
};
TrainOutputs cmd_train(const PipelineConfig& config);

// Scores every train-side query under the dense path and the LLM path,
// forms the oracle set, builds and saves the anchor.
Anchor cmd_build_anchor(const PipelineConfig& config);

enum class AblationMode { adaqr, no_rr, no_dr_rr, all_llm };
AblationMode ablation_mode_from_string(const std::string& s);
std::string to_string(AblationMode m);

struct RunSummary {
    EvalReport eval;
    std::vector<RankedList> ranked_lists;
    std::vector<RoutingDecision> decisions;
    CostLedger ledger;
    double all_llm_total = 0.0;
    double llm_fraction = 0.0;
    double savings = 0.0;
    AblationMode mode = AblationMode::adaqr;
};

// Routes, resolves, retrieves and evaluates the test side of the split.
// Writes run.trec, eval.txt/json, cost.json, routing.jsonl, summary.json
// under output_dir (skipped when write_outputs is false).
RunSummary cmd_run(const PipelineConfig& config, AblationMode mode = AblationMode::adaqr,
                   bool write_outputs = true);

struct SweepRow {
    double tau = 0.0;
    std::string mode; // threshold / always-dense / always-llm
    double mean_ndcg = 0.0;
    double llm_fraction = 0.0;
    double cost_total = 0.0;
    double savings = 0.0;
};

// Tau grid 0..1 step 0.05. The endpoints use the sentinel modes so they
// coincide with the no_rr and all_llm ablations exactly.
std::vector<SweepRow> cmd_sweep_tau(const PipelineConfig& config, bool write_outputs = true);

// Batch LLM rewriting with the persistent cache; adds reasoned_text (and
// reasoned_embedding when an embedder is configured) to the records and
// saves them to out_path.
struct RewriteBatchReport {
    size_t rewritten = 0;
    size_t cache_hits = 0;
    uint64_t prompt_tokens = 0;
    uint64_t completion_tokens = 0;
};
RewriteBatchReport cmd_rewrite(const PipelineConfig& config, const std::string& out_path);

} // namespace adaqr
