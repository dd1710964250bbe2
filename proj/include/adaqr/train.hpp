#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adaqr/mapper.hpp"
#include "adaqr/records.hpp"

namespace adaqr {

enum class Optimizer { adam, sgd };
enum class TrainStage { pretrain, finetune };

Optimizer optimizer_from_string(const std::string& s);
std::string to_string(Optimizer o);
std::string to_string(TrainStage s);

struct TrainConfig {
    double learning_rate = 5e-4;
    size_t epochs = 50;
    size_t batch_size = 64;
    uint64_t seed = 1;
    TrainStage stage = TrainStage::pretrain;
    Optimizer optimizer = Optimizer::adam;
    bool normalize_inputs = false;
    bool normalize_targets = false;
    bool output_tanh = false;
};

// Stage defaults follow the two-stage recipe: pretrain 50 epochs at 5e-4,
// finetune 3 epochs at 1e-5.
TrainConfig default_pretrain_config();
TrainConfig default_finetune_config();

struct TrainReport {
    TrainStage stage = TrainStage::pretrain;
    std::vector<double> epoch_losses; // mean MSE per epoch
    double final_loss = 0.0;
    double elapsed_seconds = 0.0;
};

// Mean over pairs of squared L2 distance: (1/M) sum_i ||pred_i - target_i||^2.
double mse_loss(const std::vector<Embedding>& predicted,
                const std::vector<Embedding>& targets);

// Gradient of mse_loss w.r.t. every mapper parameter, same shapes as
// MapperParams.
struct MapperGrad {
    size_t dim = 0;
    std::vector<double> w1;
    std::vector<double> b1;
    std::vector<double> w2;
    std::vector<double> b2;
};

MapperGrad gradient(const MapperParams& params, const EmbeddingPairSet& batch,
                    bool output_tanh = false);

// Runs epochs of shuffled mini-batch optimizer steps. Deterministic given
// config.seed (stage-local generator, fixed summation order). The same
// operation serves both stages; they differ only in config. Aborts with an
// error if the loss becomes non-finite.
std::pair<MapperParams, TrainReport> train_stage(const MapperParams& params,
                                                 const EmbeddingPairSet& pairs,
                                                 const TrainConfig& config);

std::string train_report_json(const TrainReport& report);
std::string checkpoint_meta(const TrainConfig& config, double final_loss);

} // namespace adaqr
