#include "adaqr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "adaqr/errors.hpp"
#include "adaqr/rewrite_cache.hpp"
#include "adaqr/rng.hpp"
#include "adaqr/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace adaqr {

PipelineConfig default_pipeline_config() {
    PipelineConfig c;
    c.pretrain = default_pretrain_config();
    c.finetune = default_finetune_config();
    return c;
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw_validation("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw_validation("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        if (!v.empty() && v[0] == '-') throw std::invalid_argument(v); // stoull wraps these
        size_t pos = 0;
        unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<uint64_t>(x);
    } catch (const std::exception&) {
        throw_validation("config: key '" + key + "' expects a non-negative integer, got '" + v + "'");
    }
}

struct Inputs {
    std::vector<QueryRecord> queries;
    std::vector<Document> corpus;
    RelevanceJudgments qrels;
    std::vector<QueryRecord> train_records;
    std::vector<QueryRecord> test_records;
};

Inputs load_inputs(const PipelineConfig& config) {
    if (config.queries_path.empty()) throw_validation("config: 'queries' path not set");
    if (config.corpus_path.empty()) throw_validation("config: 'corpus' path not set");
    if (config.qrels_path.empty()) throw_validation("config: 'qrels' path not set");
    Inputs in;
    in.queries = load_query_collection(config.queries_path);
    in.corpus = load_corpus(config.corpus_path);
    in.qrels = load_qrels(config.qrels_path);
    SplitResult split = split_queries(in.queries, config.split_fraction, config.seed);
    in.train_records = filter_records(in.queries, split.train_ids);
    in.test_records = filter_records(in.queries, split.test_ids);
    if (in.test_records.empty()) {
        throw_validation("split produced an empty test side (every dataset tag has a single "
                         "query); add queries or adjust tags");
    }
    return in;
}

std::string resolved_anchor_path(const PipelineConfig& config) {
    if (!config.anchor_path.empty()) return config.anchor_path;
    return (fs::path(config.checkpoint_dir) / "anchor.bin").string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw_io("cannot create directory " + dir + ": " + ec.message());
}

bool online_llm_configured(const PipelineConfig& config) {
    bool can_rewrite = !config.llm.base_url.empty();
    bool can_embed = !config.embedder.endpoint.base_url.empty() ||
                     (config.embedder.offline && !config.embedder.offline_store.empty());
    return can_rewrite && can_embed;
}

double rewrite_cost(const RewriteResult& r, CostUnit unit) {
    switch (unit) {
        case CostUnit::completion_tokens:
            return static_cast<double>(r.completion_tokens);
        case CostUnit::total_tokens:
            return static_cast<double>(r.prompt_tokens + r.completion_tokens);
        default:
            return 1.0;
    }
}

} // namespace

double tau_profile(const std::string& name) {
    static const std::map<std::string, double> profiles = {
        {"bge-large", 0.75},
        {"bge-m3", 0.70},
        {"reasonir-8b", 0.70},
        {"qwen3-embedding-0.6b", 0.60},
        {"qwen3-embedding-4b", 0.60},
    };
    auto it = profiles.find(name);
    if (it == profiles.end()) {
        std::string known;
        for (const auto& [k, v] : profiles) {
            if (!known.empty()) known += ", ";
            known += k;
        }
        throw_validation("unknown tau profile '" + name + "' (known: " + known + ")");
    }
    return it->second;
}

void apply_config_entry(PipelineConfig& c, const std::string& key, const std::string& value) {
    if (key == "queries") c.queries_path = value;
    else if (key == "corpus") c.corpus_path = value;
    else if (key == "qrels") c.qrels_path = value;
    else if (key == "pairs") c.pairs_path = value;
    else if (key == "checkpoint_dir") c.checkpoint_dir = value;
    else if (key == "cache_dir") c.cache_dir = value;
    else if (key == "output_dir") c.output_dir = value;
    else if (key == "anchor") c.anchor_path = value;
    else if (key == "k") c.eval_k = parse_u64(value, key);
    else if (key == "seed") c.seed = parse_u64(value, key);
    else if (key == "split_fraction") c.split_fraction = parse_double(value, key);
    else if (key == "epsilon") c.epsilon = parse_double(value, key);
    else if (key == "tau") c.router.tau = parse_double(value, key);
    else if (key == "tau_profile") c.router.tau = tau_profile(value);
    else if (key == "similarity") c.router.similarity = similarity_from_string(value);
    else if (key == "retrieval_similarity") c.retrieval_similarity = similarity_from_string(value);
    else if (key == "route_mode") c.router.mode = route_mode_from_string(value);
    else if (key == "cost_unit") c.cost_unit = cost_unit_from_string(value);
    else if (key == "run_tag") c.run_tag = value;
    else if (key == "output_tanh") {
        c.output_tanh = parse_bool(value, key);
        c.pretrain.output_tanh = c.output_tanh;
        c.finetune.output_tanh = c.output_tanh;
    } else if (key == "normalize_inputs") {
        c.pretrain.normalize_inputs = parse_bool(value, key);
        c.finetune.normalize_inputs = c.pretrain.normalize_inputs;
    } else if (key == "normalize_targets") {
        c.pretrain.normalize_targets = parse_bool(value, key);
        c.finetune.normalize_targets = c.pretrain.normalize_targets;
    } else if (key == "pretrain_lr") c.pretrain.learning_rate = parse_double(value, key);
    else if (key == "pretrain_epochs") c.pretrain.epochs = parse_u64(value, key);
    else if (key == "pretrain_batch") c.pretrain.batch_size = parse_u64(value, key);
    else if (key == "pretrain_optimizer") c.pretrain.optimizer = optimizer_from_string(value);
    else if (key == "pretrain_seed") c.pretrain_seed_override = parse_u64(value, key);
    else if (key == "finetune_lr") c.finetune.learning_rate = parse_double(value, key);
    else if (key == "finetune_epochs") c.finetune.epochs = parse_u64(value, key);
    else if (key == "finetune_batch") c.finetune.batch_size = parse_u64(value, key);
    else if (key == "finetune_optimizer") c.finetune.optimizer = optimizer_from_string(value);
    else if (key == "finetune_seed") c.finetune_seed_override = parse_u64(value, key);
    else if (key == "llm_base_url") c.llm.base_url = value;
    else if (key == "llm_model") c.llm.model_name = value;
    else if (key == "llm_api_key_env") c.llm.api_key_env_var = value;
    else if (key == "llm_timeout") c.llm.timeout_seconds = parse_double(value, key);
    else if (key == "llm_retries") c.llm.max_retries = static_cast<int>(parse_u64(value, key));
    else if (key == "llm_temperature") c.llm.temperature = parse_double(value, key);
    else if (key == "llm_backoff_ms") c.llm.backoff_initial_ms = static_cast<int>(parse_u64(value, key));
    else if (key == "llm_in_flight") c.llm_in_flight = parse_u64(value, key);
    else if (key == "embed_base_url") c.embedder.endpoint.base_url = value;
    else if (key == "embed_model") c.embedder.endpoint.model_name = value;
    else if (key == "embed_api_key_env") c.embedder.endpoint.api_key_env_var = value;
    else if (key == "embed_dim") c.embedder.expected_dim = parse_u64(value, key);
    else if (key == "embed_offline") c.embedder.offline = parse_bool(value, key);
    else if (key == "embed_offline_store") c.embedder.offline_store = value;
    else if (key == "rewrite_force") c.rewrite_force = parse_bool(value, key);
    else throw_validation("config: unknown key '" + key + "'");
}

PipelineConfig load_pipeline_config(const std::string& path) {
    PipelineConfig c = default_pipeline_config();
    if (path.empty()) return c;
    std::ifstream in(path);
    if (!in) throw_io("cannot open config " + path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        size_t last = line.find_last_not_of(" \t\r");
        std::string body = line.substr(first, last - first + 1);
        size_t sep = body.find('=');
        if (sep == std::string::npos) sep = body.find_first_of(" \t");
        if (sep == std::string::npos) {
            throw_validation(path + ":" + std::to_string(line_no) + ": expected 'key value'");
        }
        std::string key = body.substr(0, sep);
        size_t vstart = body.find_first_not_of(" \t=", sep);
        std::string value = vstart == std::string::npos ? "" : body.substr(vstart);
        size_t kend = key.find_last_not_of(" \t");
        key.resize(kend == std::string::npos ? 0 : kend + 1);
        try {
            apply_config_entry(c, key, value);
        } catch (const Error& e) {
            throw Error(e.kind(), path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return c;
}

SplitResult split_queries(const std::vector<QueryRecord>& records, double train_fraction,
                          uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0) {
        throw_validation("split_queries: train fraction must be in (0, 1)");
    }
    std::map<std::string, std::vector<std::string>> by_tag;
    for (const auto& r : records) by_tag[r.dataset_tag].push_back(r.id);

    SplitResult out;
    for (auto& [tag, ids] : by_tag) {
        std::sort(ids.begin(), ids.end());
        Rng rng(mix_seed(seed, fnv1a64(tag)));
        rng.shuffle(ids);
        size_t n = ids.size();
        size_t n_train;
        if (n == 1) {
            n_train = 1; // singleton tags have nothing to hold out
        } else {
            n_train = static_cast<size_t>(
                std::llround(train_fraction * static_cast<double>(n)));
            n_train = std::min(std::max<size_t>(n_train, 1), n - 1);
        }
        for (size_t i = 0; i < n; ++i) {
            (i < n_train ? out.train_ids : out.test_ids).push_back(ids[i]);
        }
    }
    std::sort(out.train_ids.begin(), out.train_ids.end());
    std::sort(out.test_ids.begin(), out.test_ids.end());
    return out;
}

std::vector<QueryRecord> filter_records(const std::vector<QueryRecord>& records,
                                        const std::vector<std::string>& ids) {
    std::vector<QueryRecord> out;
    out.reserve(ids.size());
    std::map<std::string, const QueryRecord*> by_id;
    for (const auto& r : records) by_id.emplace(r.id, &r);
    for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw_validation("filter_records: unknown query id '" + id + "'");
        out.push_back(*it->second);
    }
    return out;
}

AblationMode ablation_mode_from_string(const std::string& s) {
    if (s == "adaqr") return AblationMode::adaqr;
    if (s == "no_rr") return AblationMode::no_rr;
    if (s == "no_dr_rr") return AblationMode::no_dr_rr;
    if (s == "all_llm") return AblationMode::all_llm;
    throw_validation("unknown ablation mode '" + s + "' (expected adaqr, no_rr, no_dr_rr, all_llm)");
}

std::string to_string(AblationMode m) {
    switch (m) {
        case AblationMode::adaqr: return "adaqr";
        case AblationMode::no_rr: return "no_rr";
        case AblationMode::no_dr_rr: return "no_dr_rr";
        default: return "all_llm";
    }
}

TrainOutputs cmd_train(const PipelineConfig& config) {
    if (config.pairs_path.empty()) throw_validation("config: 'pairs' path not set");
    if (config.queries_path.empty()) {
        throw_validation("config: 'queries' path not set (needed for the fine-tune split)");
    }
    auto pair_records = load_query_collection(config.pairs_path);
    auto [pretrain_pairs, pretrain_ids] = make_pair_set(pair_records);
    (void)pretrain_ids;

    TrainConfig pre = config.pretrain;
    pre.stage = TrainStage::pretrain;
    pre.output_tanh = config.output_tanh;
    pre.seed = config.pretrain_seed_override.value_or(mix_seed(config.seed, 0xA1));

    TrainConfig fine = config.finetune;
    fine.stage = TrainStage::finetune;
    fine.output_tanh = config.output_tanh;
    fine.seed = config.finetune_seed_override.value_or(mix_seed(config.seed, 0xA2));

    TrainOutputs out;
    MapperParams init = init_params(pretrain_pairs.dim, mix_seed(config.seed, 0xA0));
    std::tie(out.pretrained, out.pretrain_report) = train_stage(init, pretrain_pairs, pre);

    // Fine-tune on the train side of the in-domain split; no
    // re-initialization, the pretrained parameters carry over.
    auto queries = load_query_collection(config.queries_path);
    SplitResult split = split_queries(queries, config.split_fraction, config.seed);
    auto train_records = filter_records(queries, split.train_ids);
    auto [finetune_pairs, finetune_ids] = make_pair_set(train_records);
    (void)finetune_ids;
    std::tie(out.finetuned, out.finetune_report) =
        train_stage(out.pretrained, finetune_pairs, fine);

    ensure_dir(config.checkpoint_dir);
    fs::path dir(config.checkpoint_dir);
    save_checkpoint(out.pretrained, (dir / "pretrain.ckpt").string(),
                    checkpoint_meta(pre, out.pretrain_report.final_loss));
    save_checkpoint(out.finetuned, (dir / "finetune.ckpt").string(),
                    checkpoint_meta(fine, out.finetune_report.final_loss));
    write_file_bytes((dir / "pretrain.report.json").string(),
                     train_report_json(out.pretrain_report) + "\n");
    write_file_bytes((dir / "finetune.report.json").string(),
                     train_report_json(out.finetune_report) + "\n");
    return out;
}

Anchor cmd_build_anchor(const PipelineConfig& config) {
    Inputs in = load_inputs(config);
    MapperParams mapper =
        load_checkpoint((fs::path(config.checkpoint_dir) / "finetune.ckpt").string());

    std::map<std::string, double> dr_scores;
    std::map<std::string, double> llm_scores;
    for (const auto& q : in.train_records) {
        if (!q.embedding) {
            throw_validation("build-anchor: query '" + q.id + "' has no original embedding");
        }
        if (!q.reasoned_embedding) {
            throw_validation("build-anchor: query '" + q.id + "' has no reasoned embedding");
        }
        if (ideal_dcg_at_k(in.qrels, q.id, config.eval_k) == 0.0) {
            std::cerr << "warning: train query '" << q.id
                      << "' has zero IDCG, skipped for anchor scoring\n";
            continue;
        }
        Embedding dense = forward(mapper, *q.embedding, config.output_tanh);
        RankedList dr_list =
            retrieve_topk(q.id, dense, in.corpus, config.eval_k, config.retrieval_similarity);
        RankedList llm_list = retrieve_topk(q.id, *q.reasoned_embedding, in.corpus,
                                            config.eval_k, config.retrieval_similarity);
        dr_scores[q.id] = ndcg_at_k(dr_list, in.qrels, config.eval_k);
        llm_scores[q.id] = ndcg_at_k(llm_list, in.qrels, config.eval_k);
    }
    if (dr_scores.empty()) {
        throw_validation("build-anchor: no scorable train queries");
    }

    auto oracle_set = build_oracle_set(dr_scores, llm_scores, config.epsilon);
    Anchor anchor = build_anchor(in.train_records, oracle_set, config.epsilon);
    ensure_dir(fs::path(resolved_anchor_path(config)).parent_path().string());
    save_anchor(anchor, resolved_anchor_path(config));

    json j;
    j["epsilon"] = config.epsilon;
    j["member_count"] = anchor.member_ids.size();
    j["scored_queries"] = dr_scores.size();
    j["members"] = anchor.member_ids;
    write_file_bytes(resolved_anchor_path(config) + ".members.json", j.dump(2) + "\n");
    return anchor;
}

namespace {

struct ResolvedQuery {
    RoutingDecision decision;
    std::optional<RewriteResult> rewrite; // present when the llm path ran online
    Embedding final_embedding;
};

// Routing + embedding resolution for one query under a concrete config.
ResolvedQuery resolve_query(const QueryRecord& q, const PipelineConfig& config,
                            const RouterConfig& rcfg, AblationMode mode,
                            const MapperParams& mapper, const std::optional<Anchor>& anchor,
                            const LlmEmbeddingSource& llm_source) {
    ResolvedQuery out;
    if (!q.embedding) {
        throw_validation("run: query '" + q.id + "' has no original embedding");
    }
    if (mode == AblationMode::no_dr_rr) {
        // No reasoning at all: the original embedding goes straight to
        // retrieval.
        out.decision.query_id = q.id;
        out.decision.path = RoutePath::dense;
        out.decision.similarity =
            anchor ? score(*q.embedding, anchor->p, rcfg.similarity) : 0.0;
        out.final_embedding = *q.embedding;
        return out;
    }
    if (anchor) {
        out.decision = route(q.id, *q.embedding, *anchor, rcfg);
    } else {
        if (rcfg.mode == RouteMode::threshold) {
            throw_validation("run: threshold routing requires an anchor file (run build-anchor "
                             "first or pass an ablation mode)");
        }
        out.decision.query_id = q.id;
        out.decision.path =
            rcfg.mode == RouteMode::always_dense ? RoutePath::dense : RoutePath::llm;
        out.decision.similarity = 0.0;
    }
    out.final_embedding =
        resolve_embedding(out.decision, q, mapper, config.output_tanh, llm_source);
    return out;
}

} // namespace

RunSummary cmd_run(const PipelineConfig& config, AblationMode mode, bool write_outputs) {
    Inputs in = load_inputs(config);

    bool online = online_llm_configured(config);
    if (!online && config.cost_unit != CostUnit::fixed_per_call) {
        throw_validation("run: token-based cost units need a configured LLM endpoint; "
                         "offline runs use cost_unit fixed_per_call");
    }

    // The mapper only matters when some query can take the dense path.
    MapperParams mapper;
    if (mode == AblationMode::adaqr || mode == AblationMode::no_rr) {
        mapper = load_checkpoint((fs::path(config.checkpoint_dir) / "finetune.ckpt").string());
    }

    std::optional<Anchor> anchor;
    std::string anchor_path = resolved_anchor_path(config);
    if (fs::exists(anchor_path)) {
        anchor = load_anchor(anchor_path);
    }

    RouterConfig rcfg = config.router;
    switch (mode) {
        case AblationMode::no_rr: rcfg.mode = RouteMode::always_dense; break;
        case AblationMode::all_llm: rcfg.mode = RouteMode::always_llm; break;
        default: break;
    }

    RewriteCache cache(config.cache_dir);
    std::map<std::string, RewriteResult> rewrites;
    LlmEmbeddingSource llm_source;
    if (online) {
        llm_source = [&](const QueryRecord& q) {
            RewriteResult r = rewrite_with_cache(q, config.llm, cache);
            EmbedConfig ec = config.embedder;
            if (ec.expected_dim == 0 && !in.corpus.empty()) {
                ec.expected_dim = in.corpus.front().embedding.dim();
            }
            Embedding e = embed_text(r.reasoned_text, ec);
            rewrites[q.id] = r;
            return e;
        };
    }

    RunSummary summary;
    summary.mode = mode;
    size_t llm_routed = 0;
    for (const auto& q : in.test_records) {
        ResolvedQuery rq =
            resolve_query(q, config, rcfg, mode, mapper, anchor, llm_source);
        if (rq.decision.path == RoutePath::llm) {
            ++llm_routed;
            if (rewrites.find(q.id) == rewrites.end()) {
                // Offline path: the precomputed rewrite is the result.
                RewriteResult r;
                r.query_id = q.id;
                r.reasoned_text = q.reasoned_text.value_or("(precomputed)");
                r.from_cache = true;
                rewrites[q.id] = std::move(r);
            }
        }
        summary.decisions.push_back(rq.decision);
        summary.ranked_lists.push_back(retrieve_topk(q.id, rq.final_embedding, in.corpus,
                                                     config.eval_k,
                                                     config.retrieval_similarity));
    }

    std::map<std::string, std::string> tags;
    for (const auto& q : in.test_records) tags[q.id] = q.dataset_tag;
    summary.eval = evaluate(summary.ranked_lists, in.qrels, config.eval_k, tags);
    summary.ledger = accumulate_cost(summary.decisions, rewrites, config.cost_unit);

    // All-LLM baseline: what rewriting every test query would cost.
    if (config.cost_unit == CostUnit::fixed_per_call) {
        summary.all_llm_total = static_cast<double>(in.test_records.size());
    } else {
        double total = 0.0;
        for (const auto& q : in.test_records) {
            auto it = rewrites.find(q.id);
            if (it != rewrites.end()) {
                total += rewrite_cost(it->second, config.cost_unit);
            } else {
                RewriteResult r = rewrite_with_cache(q, config.llm, cache);
                total += rewrite_cost(r, config.cost_unit);
            }
        }
        summary.all_llm_total = total;
    }
    summary.llm_fraction = in.test_records.empty()
                               ? 0.0
                               : static_cast<double>(llm_routed) /
                                     static_cast<double>(in.test_records.size());
    summary.savings = savings_vs_all_llm(summary.ledger, summary.all_llm_total);

    if (write_outputs) {
        ensure_dir(config.output_dir);
        fs::path dir(config.output_dir);
        std::string stem = mode == AblationMode::adaqr ? "run" : "run." + to_string(mode);
        write_run_file(summary.ranked_lists, (dir / (stem + ".trec")).string(), config.run_tag);
        write_eval_report_text(summary.eval, (dir / (stem + ".eval.txt")).string());
        write_eval_report_json(summary.eval, (dir / (stem + ".eval.json")).string());
        write_cost_ledger_json(summary.ledger, summary.all_llm_total,
                               (dir / (stem + ".cost.json")).string());
        write_routing_audit(summary.decisions, rcfg, (dir / (stem + ".routing.jsonl")).string());

        json j;
        j["mode"] = to_string(mode);
        j["k"] = config.eval_k;
        j["mean_ndcg"] = summary.eval.mean_ndcg;
        j["queries"] = summary.eval.per_query.size();
        j["excluded_zero_idcg"] = summary.eval.excluded_zero_idcg;
        j["llm_fraction"] = summary.llm_fraction;
        j["cost_unit"] = to_string(config.cost_unit);
        j["cost_total"] = summary.ledger.total;
        j["all_llm_total"] = summary.all_llm_total;
        j["savings"] = summary.savings;
        j["per_tag"] = summary.eval.per_tag;
        write_file_bytes((dir / (stem + ".summary.json")).string(), j.dump(2) + "\n");
    }
    return summary;
}

std::vector<SweepRow> cmd_sweep_tau(const PipelineConfig& config, bool write_outputs) {
    Inputs in = load_inputs(config);
    if (config.cost_unit != CostUnit::fixed_per_call && !online_llm_configured(config)) {
        throw_validation("sweep-tau: token-based cost units need a configured LLM endpoint");
    }

    MapperParams mapper =
        load_checkpoint((fs::path(config.checkpoint_dir) / "finetune.ckpt").string());
    Anchor anchor = load_anchor(resolved_anchor_path(config));

    // Both candidate rankings are fixed across the grid; only the routing
    // choice changes with tau, so score each query once per path.
    struct PerQuery {
        std::string id;
        double similarity;
        double ndcg_dense;
        double ndcg_llm;
        double llm_cost;
    };
    std::vector<PerQuery> queries;
    RewriteCache cache(config.cache_dir);
    for (const auto& q : in.test_records) {
        if (!q.embedding) throw_validation("sweep-tau: query '" + q.id + "' has no embedding");
        if (ideal_dcg_at_k(in.qrels, q.id, config.eval_k) == 0.0) {
            std::cerr << "warning: query '" << q.id << "' has zero IDCG, excluded from sweep\n";
            continue;
        }
        PerQuery pq;
        pq.id = q.id;
        pq.similarity = score(*q.embedding, anchor.p, config.router.similarity);

        Embedding dense = forward(mapper, *q.embedding, config.output_tanh);
        pq.ndcg_dense = ndcg_at_k(retrieve_topk(q.id, dense, in.corpus, config.eval_k,
                                                config.retrieval_similarity),
                                  in.qrels, config.eval_k);

        Embedding llm_embedding;
        RewriteResult rewrite;
        rewrite.query_id = q.id;
        if (q.reasoned_embedding) {
            llm_embedding = *q.reasoned_embedding;
            rewrite.reasoned_text = q.reasoned_text.value_or("(precomputed)");
        } else if (online_llm_configured(config)) {
            rewrite = rewrite_with_cache(q, config.llm, cache);
            EmbedConfig ec = config.embedder;
            if (ec.expected_dim == 0 && !in.corpus.empty()) {
                ec.expected_dim = in.corpus.front().embedding.dim();
            }
            llm_embedding = embed_text(rewrite.reasoned_text, ec);
        } else {
            throw_validation("sweep-tau: query '" + q.id +
                             "' has no reasoned embedding and no online source is configured");
        }
        pq.ndcg_llm = ndcg_at_k(retrieve_topk(q.id, llm_embedding, in.corpus, config.eval_k,
                                              config.retrieval_similarity),
                                in.qrels, config.eval_k);
        pq.llm_cost = rewrite_cost(rewrite, config.cost_unit);
        queries.push_back(std::move(pq));
    }
    if (queries.empty()) throw_validation("sweep-tau: no scorable test queries");

    // Mean over sorted query ids, matching evaluate()'s summation order so
    // the sentinel endpoints coincide with the ablation runs bit for bit.
    std::sort(queries.begin(), queries.end(),
              [](const PerQuery& a, const PerQuery& b) { return a.id < b.id; });

    std::vector<SweepRow> rows;
    const size_t grid_steps = 20; // tau = i / 20, step 0.05
    for (size_t i = 0; i <= grid_steps; ++i) {
        SweepRow row;
        row.tau = static_cast<double>(i) / static_cast<double>(grid_steps);
        RouteMode mode = i == 0              ? RouteMode::always_dense
                         : i == grid_steps   ? RouteMode::always_llm
                                             : RouteMode::threshold;
        row.mode = to_string(mode);
        double sum = 0.0;
        size_t llm_routed = 0;
        for (const auto& pq : queries) {
            bool dense = mode == RouteMode::always_dense ||
                         (mode == RouteMode::threshold && pq.similarity >= row.tau);
            if (dense) {
                sum += pq.ndcg_dense;
            } else {
                sum += pq.ndcg_llm;
                ++llm_routed;
                row.cost_total += pq.llm_cost;
            }
        }
        row.mean_ndcg = sum / static_cast<double>(queries.size());
        row.llm_fraction =
            static_cast<double>(llm_routed) / static_cast<double>(queries.size());
        double all_llm_total = 0.0;
        for (const auto& pq : queries) all_llm_total += pq.llm_cost;
        row.savings = all_llm_total > 0.0 ? 1.0 - row.cost_total / all_llm_total : 0.0;
        rows.push_back(row);
    }

    if (write_outputs) {
        ensure_dir(config.output_dir);
        fs::path dir(config.output_dir);
        std::ofstream tsv((dir / "sweep.tsv").string(), std::ios::binary);
        if (!tsv) throw_io("cannot open sweep.tsv for writing");
        tsv << "tau\tmode\tmean_ndcg\tllm_fraction\tcost_total\tsavings\n";
        char buf[192];
        std::ofstream jsonl((dir / "sweep.jsonl").string(), std::ios::binary);
        if (!jsonl) throw_io("cannot open sweep.jsonl for writing");
        for (const auto& row : rows) {
            std::snprintf(buf, sizeof(buf), "%.2f\t%s\t%.6f\t%.6f\t%.6f\t%.6f\n", row.tau,
                          row.mode.c_str(), row.mean_ndcg, row.llm_fraction, row.cost_total,
                          row.savings);
            tsv << buf;
            json j;
            j["tau"] = row.tau;
            j["mode"] = row.mode;
            j["mean_ndcg"] = row.mean_ndcg;
            j["llm_fraction"] = row.llm_fraction;
            j["cost_total"] = row.cost_total;
            j["savings"] = row.savings;
            jsonl << j.dump() << "\n";
        }
    }
    return rows;
}

RewriteBatchReport cmd_rewrite(const PipelineConfig& config, const std::string& out_path) {
    if (config.queries_path.empty()) throw_validation("config: 'queries' path not set");
    if (config.llm.base_url.empty()) {
        throw_validation("rewrite: llm_base_url is not configured");
    }
    auto records = load_query_collection(config.queries_path);
    RewriteCache cache(config.cache_dir);

    std::vector<size_t> todo;
    for (size_t i = 0; i < records.size(); ++i) {
        if (config.rewrite_force || !records[i].reasoned_text) todo.push_back(i);
    }

    bool embed = !config.embedder.endpoint.base_url.empty() ||
                 (config.embedder.offline && !config.embedder.offline_store.empty());

    std::atomic<size_t> next{0};
    std::mutex mu;
    RewriteBatchReport report;
    std::exception_ptr first_error;

    size_t workers = std::max<size_t>(1, std::min(config.llm_in_flight, todo.size()));
    auto worker = [&]() {
        for (;;) {
            size_t slot = next.fetch_add(1);
            if (slot >= todo.size()) return;
            size_t idx = todo[slot];
            try {
                RewriteResult r = rewrite_with_cache(records[idx], config.llm, cache);
                std::optional<Embedding> e;
                if (embed) e = embed_text(r.reasoned_text, config.embedder);
                std::lock_guard<std::mutex> lock(mu);
                records[idx].reasoned_text = r.reasoned_text;
                if (e) records[idx].reasoned_embedding = std::move(*e);
                ++report.rewritten;
                if (r.from_cache) ++report.cache_hits;
                report.prompt_tokens += r.prompt_tokens;
                report.completion_tokens += r.completion_tokens;
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first_error) first_error = std::current_exception();
                next.store(todo.size()); // stop handing out work
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    save_query_collection(records, out_path);

    json j;
    j["rewritten"] = report.rewritten;
    j["cache_hits"] = report.cache_hits;
    j["prompt_tokens"] = report.prompt_tokens;
    j["completion_tokens"] = report.completion_tokens;
    write_file_bytes(out_path + ".rewrites.json", j.dump(2) + "\n");
    return report;
}

} // namespace adaqr
