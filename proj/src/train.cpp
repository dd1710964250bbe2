#include "adaqr/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "adaqr/errors.hpp"
#include "adaqr/rng.hpp"

namespace adaqr {

Optimizer optimizer_from_string(const std::string& s) {
    if (s == "adam") return Optimizer::adam;
    if (s == "sgd") return Optimizer::sgd;
    throw_validation("unknown optimizer '" + s + "' (expected adam or sgd)");
}

std::string to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }
std::string to_string(TrainStage s) { return s == TrainStage::pretrain ? "pretrain" : "finetune"; }

TrainConfig default_pretrain_config() {
    TrainConfig c;
    c.learning_rate = 5e-4;
    c.epochs = 50;
    c.stage = TrainStage::pretrain;
    return c;
}

TrainConfig default_finetune_config() {
    TrainConfig c;
    c.learning_rate = 1e-5;
    c.epochs = 3;
    c.stage = TrainStage::finetune;
    return c;
}

double mse_loss(const std::vector<Embedding>& predicted,
                const std::vector<Embedding>& targets) {
    if (predicted.empty()) throw_validation("mse_loss: empty input");
    if (predicted.size() != targets.size()) {
        throw_validation("mse_loss: count mismatch (" + std::to_string(predicted.size()) +
                         " vs " + std::to_string(targets.size()) + ")");
    }
    double sum = 0.0;
    for (size_t i = 0; i < predicted.size(); ++i) {
        require_same_dim(predicted[i], targets[i], "mse_loss pair " + std::to_string(i));
        for (size_t j = 0; j < predicted[i].dim(); ++j) {
            double diff = predicted[i].values[j] - targets[i].values[j];
            sum += diff * diff;
        }
    }
    return sum / static_cast<double>(predicted.size());
}

namespace {

struct ForwardTrace {
    std::vector<double> hidden;  // tanh(w1 e + b1)
    std::vector<double> output;  // w2 hidden + b2 (post-activation if output_tanh)
};

ForwardTrace traced_forward(const MapperParams& p, const Embedding& e, bool output_tanh) {
    size_t d = p.dim;
    ForwardTrace t;
    t.hidden.resize(d);
    t.output.resize(d);
    for (size_t i = 0; i < d; ++i) {
        double acc = p.b1[i];
        const double* row = &p.w1[i * d];
        for (size_t j = 0; j < d; ++j) acc += row[j] * e.values[j];
        t.hidden[i] = std::tanh(acc);
    }
    for (size_t i = 0; i < d; ++i) {
        double acc = p.b2[i];
        const double* row = &p.w2[i * d];
        for (size_t j = 0; j < d; ++j) acc += row[j] * t.hidden[j];
        t.output[i] = output_tanh ? std::tanh(acc) : acc;
    }
    return t;
}

// Accumulates one pair's backprop contribution into g (unscaled).
void accumulate_pair_grad(const MapperParams& p, const Embedding& e, const Embedding& target,
                          bool output_tanh, MapperGrad& g,
                          std::vector<double>& delta2, std::vector<double>& delta1,
                          double* sq_err) {
    size_t d = p.dim;
    ForwardTrace t = traced_forward(p, e, output_tanh);

    for (size_t i = 0; i < d; ++i) {
        double diff = t.output[i] - target.values[i];
        if (sq_err) *sq_err += diff * diff;
        double dl = 2.0 * diff;
        if (output_tanh) dl *= 1.0 - t.output[i] * t.output[i];
        delta2[i] = dl;
    }
    for (size_t i = 0; i < d; ++i) {
        double* row = &g.w2[i * d];
        for (size_t j = 0; j < d; ++j) row[j] += delta2[i] * t.hidden[j];
        g.b2[i] += delta2[i];
    }
    for (size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (size_t i = 0; i < d; ++i) acc += p.w2[i * d + j] * delta2[i];
        delta1[j] = acc * (1.0 - t.hidden[j] * t.hidden[j]);
    }
    for (size_t i = 0; i < d; ++i) {
        double* row = &g.w1[i * d];
        for (size_t j = 0; j < d; ++j) row[j] += delta1[i] * e.values[j];
        g.b1[i] += delta1[i];
    }
}

MapperGrad zero_grad(size_t d) {
    MapperGrad g;
    g.dim = d;
    g.w1.assign(d * d, 0.0);
    g.b1.assign(d, 0.0);
    g.w2.assign(d * d, 0.0);
    g.b2.assign(d, 0.0);
    return g;
}

void scale_grad(MapperGrad& g, double c) {
    for (double& x : g.w1) x *= c;
    for (double& x : g.b1) x *= c;
    for (double& x : g.w2) x *= c;
    for (double& x : g.b2) x *= c;
}

// Adam state per parameter block.
struct AdamState {
    std::vector<double> m, v;
    explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_update(std::vector<double>& theta, const std::vector<double>& grad,
                 AdamState& state, double lr, size_t step) {
    double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
    for (size_t i = 0; i < theta.size(); ++i) {
        state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grad[i];
        state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        theta[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
    }
}

void sgd_update(std::vector<double>& theta, const std::vector<double>& grad, double lr) {
    for (size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
}

} // namespace

MapperGrad gradient(const MapperParams& params, const EmbeddingPairSet& batch,
                    bool output_tanh) {
    if (batch.empty()) throw_validation("gradient: empty batch");
    if (batch.dim != params.dim) {
        throw_validation("gradient: batch dim " + std::to_string(batch.dim) +
                         " does not match mapper dim " + std::to_string(params.dim));
    }
    size_t d = params.dim;
    MapperGrad g = zero_grad(d);
    std::vector<double> delta2(d), delta1(d);
    for (const auto& [original, reasoned] : batch.pairs) {
        if (original.dim() != d || reasoned.dim() != d) {
            throw_validation("gradient: pair dim mismatch");
        }
        accumulate_pair_grad(params, original, reasoned, output_tanh, g, delta2, delta1, nullptr);
    }
    scale_grad(g, 1.0 / static_cast<double>(batch.size()));
    return g;
}

std::pair<MapperParams, TrainReport> train_stage(const MapperParams& params,
                                                 const EmbeddingPairSet& pairs,
                                                 const TrainConfig& config) {
    if (pairs.empty()) throw_validation("train_stage: empty pair set");
    if (config.learning_rate <= 0.0) throw_validation("train_stage: learning_rate must be > 0");
    if (config.epochs < 1) throw_validation("train_stage: epochs must be >= 1");
    if (config.batch_size < 1) throw_validation("train_stage: batch_size must be >= 1");
    if (pairs.dim != params.dim) {
        throw_validation("train_stage: pair dim " + std::to_string(pairs.dim) +
                         " does not match mapper dim " + std::to_string(params.dim));
    }
    validate_params(params);

    auto started = std::chrono::steady_clock::now();
    size_t d = params.dim;

    // Materialize the training view once (normalization is per-config).
    std::vector<Embedding> inputs, targets;
    inputs.reserve(pairs.size());
    targets.reserve(pairs.size());
    for (const auto& [original, reasoned] : pairs.pairs) {
        inputs.push_back(config.normalize_inputs ? normalized(original) : original);
        targets.push_back(config.normalize_targets ? normalized(reasoned) : reasoned);
    }

    MapperParams theta = params;
    AdamState aw1(d * d), ab1(d), aw2(d * d), ab2(d);
    size_t adam_step = 0;

    TrainReport report;
    report.stage = config.stage;
    report.epoch_losses.reserve(config.epochs);

    Rng rng(config.seed);
    std::vector<size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::vector<double> delta2(d), delta1(d);

    for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            size_t end = std::min(start + config.batch_size, order.size());
            size_t count = end - start;
            MapperGrad g = zero_grad(d);
            double batch_sq_err = 0.0;
            for (size_t i = start; i < end; ++i) {
                accumulate_pair_grad(theta, inputs[order[i]], targets[order[i]],
                                     config.output_tanh, g, delta2, delta1, &batch_sq_err);
            }
            scale_grad(g, 1.0 / static_cast<double>(count));
            if (!std::isfinite(batch_sq_err)) {
                throw_validation("train_stage: loss diverged (non-finite) in epoch " +
                                 std::to_string(epoch + 1));
            }
            if (config.optimizer == Optimizer::adam) {
                ++adam_step;
                adam_update(theta.w1, g.w1, aw1, config.learning_rate, adam_step);
                adam_update(theta.b1, g.b1, ab1, config.learning_rate, adam_step);
                adam_update(theta.w2, g.w2, aw2, config.learning_rate, adam_step);
                adam_update(theta.b2, g.b2, ab2, config.learning_rate, adam_step);
            } else {
                sgd_update(theta.w1, g.w1, config.learning_rate);
                sgd_update(theta.b1, g.b1, config.learning_rate);
                sgd_update(theta.w2, g.w2, config.learning_rate);
                sgd_update(theta.b2, g.b2, config.learning_rate);
            }
        }
        // Objective value at the end of the epoch, over the whole set.
        double epoch_loss = 0.0;
        for (size_t i = 0; i < inputs.size(); ++i) {
            Embedding predicted = forward(theta, inputs[i], config.output_tanh);
            for (size_t j = 0; j < d; ++j) {
                double diff = predicted.values[j] - targets[i].values[j];
                epoch_loss += diff * diff;
            }
        }
        epoch_loss /= static_cast<double>(pairs.size());
        if (!std::isfinite(epoch_loss)) {
            throw_validation("train_stage: loss diverged (non-finite) in epoch " +
                             std::to_string(epoch + 1));
        }
        report.epoch_losses.push_back(epoch_loss);
    }
    report.final_loss = report.epoch_losses.back();
    report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return {std::move(theta), std::move(report)};
}

std::string train_report_json(const TrainReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "{\"stage\":\"" << to_string(report.stage) << "\",\"final_loss\":" << report.final_loss
        << ",\"elapsed_seconds\":" << report.elapsed_seconds << ",\"epoch_losses\":[";
    for (size_t i = 0; i < report.epoch_losses.size(); ++i) {
        if (i) out << ",";
        out << report.epoch_losses[i];
    }
    out << "]}";
    return out.str();
}

std::string checkpoint_meta(const TrainConfig& config, double final_loss) {
    std::ostringstream out;
    out.precision(17);
    out << "stage " << to_string(config.stage) << "\n"
        << "optimizer " << to_string(config.optimizer) << "\n"
        << "learning_rate " << config.learning_rate << "\n"
        << "epochs " << config.epochs << "\n"
        << "batch_size " << config.batch_size << "\n"
        << "seed " << config.seed << "\n"
        << "normalize_inputs " << (config.normalize_inputs ? 1 : 0) << "\n"
        << "normalize_targets " << (config.normalize_targets ? 1 : 0) << "\n"
        << "output_tanh " << (config.output_tanh ? 1 : 0) << "\n"
        << "final_loss " << final_loss << "\n";
    return out.str();
}

} // namespace adaqr
