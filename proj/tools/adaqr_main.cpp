// adaqr — adaptive query reasoning for dense retrieval.
//
// Subcommands cover the full workflow: synth (benchmark generation),
// train (two-stage dense reasoner training), build-anchor, run, ablation,
// sweep-tau, mrl, pca, and rewrite (batch LLM rewriting with a cache).
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 external-service error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adaqr/errors.hpp"
#include "adaqr/pipeline.hpp"
#include "adaqr/shift_stats.hpp"
#include "adaqr/store.hpp"
#include "adaqr/synth.hpp"

namespace fs = std::filesystem;
using namespace adaqr;

namespace {

// Config file first, then command-line overrides: flags win.
struct ConfigCli {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;

    PipelineConfig resolve() const {
        PipelineConfig c = load_pipeline_config(config_path);
        for (const auto& [key, value] : overrides) {
            apply_config_entry(c, key, value);
        }
        return c;
    }
};

void add_config_options(CLI::App* cmd, ConfigCli& cli) {
    cmd->add_option("--config", cli.config_path, "flat key-value config file");
    auto capture = [&cli](const std::string& key) {
        return [&cli, key](const std::string& value) {
            cli.overrides.emplace_back(key, value);
        };
    };
    // Every config key is overridable; see README for the full list.
    static const char* keys[] = {
        "queries", "corpus", "qrels", "pairs", "checkpoint_dir", "cache_dir",
        "output_dir", "anchor", "k", "seed", "split_fraction", "epsilon", "tau",
        "tau_profile", "similarity", "retrieval_similarity", "route_mode", "cost_unit",
        "run_tag", "output_tanh", "normalize_inputs", "normalize_targets",
        "pretrain_lr", "pretrain_epochs", "pretrain_batch", "pretrain_optimizer",
        "pretrain_seed", "finetune_lr", "finetune_epochs", "finetune_batch",
        "finetune_optimizer", "finetune_seed", "llm_base_url", "llm_model",
        "llm_api_key_env", "llm_timeout", "llm_retries", "llm_temperature",
        "llm_backoff_ms", "llm_in_flight", "embed_base_url", "embed_model",
        "embed_api_key_env", "embed_dim", "embed_offline", "embed_offline_store",
        "rewrite_force",
    };
    for (const char* key : keys) {
        std::string flag = std::string("--") + key;
        for (char& ch : flag) {
            if (ch == '_') ch = '-';
        }
        cmd->add_option_function<std::string>(flag, capture(key))->group("config overrides");
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"adaqr: adaptive query reasoning for dense retrieval"};
    app.require_subcommand(1);

    // --- synth ---
    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark");
    SyntheticSpec spec;
    std::string synth_out = "bench";
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--dim", spec.dim, "embedding dimension");
    synth->add_option("--train-pairs", spec.num_train_pairs, "pre-training pair count");
    synth->add_option("--eval-queries", spec.num_eval_queries, "evaluation query count");
    synth->add_option("--corpus-size", spec.corpus_size, "total corpus size");
    synth->add_option("--noise-sigma", spec.noise_sigma, "per-coordinate noise sigma");
    synth->add_option("--structured-fraction", spec.structured_fraction,
                      "fraction of queries with a systematic transformation");
    synth->add_option("--seed", spec.seed, "generator seed");

    // --- pipeline commands share the config machinery ---
    ConfigCli train_cli, anchor_cli, run_cli_cfg, ablation_cli, sweep_cli, rewrite_cli;
    auto* train = app.add_subcommand("train", "two-stage dense reasoner training");
    add_config_options(train, train_cli);

    auto* build_anchor = app.add_subcommand("build-anchor", "score train queries and build the router anchor");
    add_config_options(build_anchor, anchor_cli);

    auto* run = app.add_subcommand("run", "route, retrieve and evaluate the test split");
    add_config_options(run, run_cli_cfg);

    auto* ablation = app.add_subcommand("ablation", "run an ablation mode");
    std::string ablation_mode = "adaqr";
    ablation->add_option("--mode", ablation_mode, "adaqr | no_rr | no_dr_rr | all_llm")
        ->required();
    add_config_options(ablation, ablation_cli);

    auto* sweep = app.add_subcommand("sweep-tau", "evaluate the tau grid 0..1 step 0.05");
    add_config_options(sweep, sweep_cli);

    auto* rewrite = app.add_subcommand("rewrite", "batch LLM rewriting with the cache");
    std::string rewrite_out;
    rewrite->add_option("--out", rewrite_out, "output records file")->required();
    add_config_options(rewrite, rewrite_cli);

    // --- diagnostics ---
    auto* mrl = app.add_subcommand("mrl", "mean resultant length of a pairs file");
    std::string mrl_pairs;
    mrl->add_option("--pairs", mrl_pairs, "records file with embedding pairs")->required();

    auto* pca = app.add_subcommand("pca", "2-component PCA arrow export of a pairs file");
    std::string pca_pairs, pca_out = "pca_arrows.jsonl";
    pca->add_option("--pairs", pca_pairs, "records file with embedding pairs")->required();
    pca->add_option("--out", pca_out, "arrow export path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // help text, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1; // usage error
    }

    if (synth->parsed()) {
        SyntheticBenchmark bench = generate_benchmark(spec);
        write_benchmark(bench, synth_out);
        std::cout << "wrote " << bench.eval_queries.size() << " queries, "
                  << bench.train_pairs.size() << " pairs, " << bench.corpus.size()
                  << " documents to " << synth_out << "\n";
        return 0;
    }
    if (train->parsed()) {
        PipelineConfig config = train_cli.resolve();
        TrainOutputs out = cmd_train(config);
        auto log_epochs = [](const TrainReport& report) {
            for (size_t i = 0; i < report.epoch_losses.size(); ++i) {
                std::printf("%s epoch %zu/%zu: loss %.6g\n", to_string(report.stage).c_str(),
                            i + 1, report.epoch_losses.size(), report.epoch_losses[i]);
            }
        };
        log_epochs(out.pretrain_report);
        log_epochs(out.finetune_report);
        std::printf("pretrain: final loss %.6g in %.1fs\n", out.pretrain_report.final_loss,
                    out.pretrain_report.elapsed_seconds);
        std::printf("finetune: final loss %.6g in %.1fs\n", out.finetune_report.final_loss,
                    out.finetune_report.elapsed_seconds);
        return 0;
    }
    if (build_anchor->parsed()) {
        PipelineConfig config = anchor_cli.resolve();
        Anchor anchor = cmd_build_anchor(config);
        std::cout << "anchor built from " << anchor.member_ids.size() << " queries (epsilon "
                  << anchor.epsilon << ")\n";
        return 0;
    }
    if (run->parsed()) {
        PipelineConfig config = run_cli_cfg.resolve();
        RunSummary s = cmd_run(config);
        std::printf("mean nDCG@%zu %.4f | llm fraction %.3f | cost %.1f (%s) | savings %.1f%%\n",
                    config.eval_k, s.eval.mean_ndcg, s.llm_fraction, s.ledger.total,
                    to_string(config.cost_unit).c_str(), 100.0 * s.savings);
        return 0;
    }
    if (ablation->parsed()) {
        PipelineConfig config = ablation_cli.resolve();
        RunSummary s = cmd_run(config, ablation_mode_from_string(ablation_mode));
        std::printf("%s: mean nDCG@%zu %.4f | llm fraction %.3f | cost %.1f\n",
                    ablation_mode.c_str(), config.eval_k, s.eval.mean_ndcg, s.llm_fraction,
                    s.ledger.total);
        return 0;
    }
    if (sweep->parsed()) {
        PipelineConfig config = sweep_cli.resolve();
        auto rows = cmd_sweep_tau(config);
        std::printf("%-6s %-13s %-10s %-9s %s\n", "tau", "mode", "mean_ndcg", "llm_frac", "cost");
        for (const auto& row : rows) {
            std::printf("%-6.2f %-13s %-10.4f %-9.3f %.1f\n", row.tau, row.mode.c_str(),
                        row.mean_ndcg, row.llm_fraction, row.cost_total);
        }
        return 0;
    }
    if (rewrite->parsed()) {
        PipelineConfig config = rewrite_cli.resolve();
        RewriteBatchReport report = cmd_rewrite(config, rewrite_out);
        std::printf("rewrote %zu queries (%zu cache hits, %llu completion tokens)\n",
                    report.rewritten, report.cache_hits,
                    static_cast<unsigned long long>(report.completion_tokens));
        return 0;
    }
    if (mrl->parsed()) {
        auto records = load_query_collection(mrl_pairs);
        auto [pairs, ids] = make_pair_set(records);
        (void)ids;
        ShiftStats stats = shift_stats(pairs);
        std::printf("pairs %zu\nmrl %.6f\nmean_shift_norm %.6f\nmin_shift_norm %.6f\n"
                    "max_shift_norm %.6f\n",
                    pairs.size(), stats.mrl, stats.mean_shift_norm, stats.min_shift_norm,
                    stats.max_shift_norm);
        return 0;
    }
    if (pca->parsed()) {
        auto records = load_query_collection(pca_pairs);
        auto [pairs, ids] = make_pair_set(records);
        PcaProjection proj = pca_shift_projection(pairs);
        write_pca_export(proj, ids, pca_out);
        std::printf("wrote %zu arrows to %s (variance %.6g / %.6g)\n", proj.arrows.size(),
                    pca_out.c_str(), proj.variance1, proj.variance2);
        return 0;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::network ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
