#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "adaqr/errors.hpp"
#include "adaqr/rng.hpp"
#include "adaqr/train.hpp"

using namespace adaqr;

namespace {

Embedding random_embedding(Rng& rng, size_t dim, double scale = 1.0) {
    Embedding e;
    for (size_t j = 0; j < dim; ++j) e.values.push_back(scale * rng.next_gaussian());
    return e;
}

EmbeddingPairSet random_pairs(Rng& rng, size_t n, size_t dim) {
    EmbeddingPairSet set;
    set.dim = dim;
    for (size_t i = 0; i < n; ++i) {
        set.pairs.emplace_back(random_embedding(rng, dim), random_embedding(rng, dim));
    }
    return set;
}

// Loss evaluated from scratch, used as the finite-difference oracle.
double batch_loss(const MapperParams& p, const EmbeddingPairSet& batch, bool output_tanh) {
    std::vector<Embedding> pred, targets;
    for (const auto& [e, t] : batch.pairs) {
        pred.push_back(forward(p, e, output_tanh));
        targets.push_back(t);
    }
    return mse_loss(pred, targets);
}

// Central finite differences over every parameter entry; returns the max
// relative error vs the analytic gradient.
double fd_max_rel_error(MapperParams p, const EmbeddingPairSet& batch, bool output_tanh) {
    const double h = 1e-5;
    MapperGrad g = gradient(p, batch, output_tanh);
    double worst = 0.0;
    auto audit = [&](std::vector<double>& theta, const std::vector<double>& analytic) {
        for (size_t i = 0; i < theta.size(); ++i) {
            double saved = theta[i];
            theta[i] = saved + h;
            double up = batch_loss(p, batch, output_tanh);
            theta[i] = saved - h;
            double down = batch_loss(p, batch, output_tanh);
            theta[i] = saved;
            double fd = (up - down) / (2.0 * h);
            double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
            worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
        }
    };
    audit(p.w1, g.w1);
    audit(p.b1, g.b1);
    audit(p.w2, g.w2);
    audit(p.b2, g.b2);
    return worst;
}

} // namespace

TEST_CASE("mse_loss: analytic cases and errors") {
    Embedding a({1.0, 0.0});
    Embedding z({0.0, 0.0});
    CHECK(mse_loss({a}, {a}) == 0.0);
    CHECK(mse_loss({a}, {z}) == doctest::Approx(1.0));
    // Two pairs with squared norms 1 and 3 -> mean 2.
    Embedding b({1.0, std::sqrt(2.0)});
    CHECK(mse_loss({a, b}, {z, z}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(mse_loss({}, {}), Error);
    CHECK_THROWS_AS(mse_loss({a}, {a, b}), Error);
    CHECK_THROWS_AS(mse_loss({a}, {Embedding({1.0, 0.0, 0.0})}), Error);
}

TEST_CASE("gradient: zero at a perfect fit") {
    Rng rng(5);
    MapperParams p = init_params(4, 8);
    EmbeddingPairSet batch;
    batch.dim = 4;
    for (int i = 0; i < 6; ++i) {
        Embedding e = random_embedding(rng, 4);
        batch.pairs.emplace_back(e, forward(p, e)); // targets realized exactly
    }
    MapperGrad g = gradient(p, batch);
    for (double x : g.w1) CHECK(std::abs(x) < 1e-12);
    for (double x : g.w2) CHECK(std::abs(x) < 1e-12);
    for (double x : g.b1) CHECK(std::abs(x) < 1e-12);
    for (double x : g.b2) CHECK(std::abs(x) < 1e-12);
}

TEST_CASE("gradient: matches central finite differences on random cases") {
    Rng rng(41);
    for (int trial = 0; trial < 8; ++trial) {
        size_t dim = 3 + rng.next_index(6); // dims 3..8
        MapperParams p = init_params(dim, 1000 + trial);
        EmbeddingPairSet batch = random_pairs(rng, 1 + rng.next_index(7), dim);
        bool output_tanh = trial % 2 == 1;
        CHECK(fd_max_rel_error(p, batch, output_tanh) < 1e-4);
    }
}

TEST_CASE("gradient: saturated hidden units contribute nothing through w1") {
    // Huge b1 saturates every tanh; d/dw1 ~ (1 - a^2) ~ 0.
    Rng rng(43);
    MapperParams p = init_params(3, 7);
    p.b1.assign(3, 30.0);
    EmbeddingPairSet batch = random_pairs(rng, 1, 3);
    MapperGrad g = gradient(p, batch);
    for (double x : g.w1) CHECK(std::abs(x) < 1e-12);
    CHECK(fd_max_rel_error(p, batch, false) < 1e-4);
}

TEST_CASE("gradient: validation errors") {
    MapperParams p = init_params(3, 1);
    EmbeddingPairSet empty;
    empty.dim = 3;
    CHECK_THROWS_AS(gradient(p, empty), Error);
    Rng rng(1);
    EmbeddingPairSet wrong = random_pairs(rng, 2, 4);
    CHECK_THROWS_AS(gradient(p, wrong), Error);
}

TEST_CASE("train_stage: learns the identity task") {
    Rng rng(47);
    EmbeddingPairSet pairs;
    pairs.dim = 8;
    for (int i = 0; i < 2500; ++i) {
        Embedding e = random_embedding(rng, 8, 0.25);
        pairs.pairs.emplace_back(e, e); // reasoned == original
    }
    TrainConfig config = default_pretrain_config(); // 50 epochs at 5e-4
    config.batch_size = 8;
    config.seed = 7;
    auto [params, report] = train_stage(init_params(8, 3), pairs, config);
    REQUIRE(report.epoch_losses.size() == 50);
    CHECK(report.final_loss < 1e-3);
    CHECK(report.final_loss < report.epoch_losses.front());
    validate_params(params);
}

TEST_CASE("train_stage: one batch, one epoch, deterministic") {
    Rng rng(53);
    EmbeddingPairSet pairs = random_pairs(rng, 10, 4);
    TrainConfig config;
    config.epochs = 1;
    config.batch_size = 64; // >= |pairs| -> exactly one optimizer step
    config.seed = 11;
    auto [a, report_a] = train_stage(init_params(4, 2), pairs, config);
    CHECK(report_a.epoch_losses.size() == 1);
    auto [b, report_b] = train_stage(init_params(4, 2), pairs, config);
    CHECK(a == b);
    CHECK(report_a.epoch_losses == report_b.epoch_losses);
}

TEST_CASE("train_stage: sgd step is exactly -lr * gradient") {
    Rng rng(59);
    EmbeddingPairSet pairs = random_pairs(rng, 5, 3);
    MapperParams start = init_params(3, 4);
    TrainConfig config;
    config.optimizer = Optimizer::sgd;
    config.learning_rate = 1e-5;
    config.epochs = 1;
    config.batch_size = 100; // single full batch: shuffle order is irrelevant
    auto [after, report] = train_stage(start, pairs, config);
    (void)report;
    MapperGrad g = gradient(start, pairs);
    for (size_t i = 0; i < start.w1.size(); ++i) {
        CHECK(after.w1[i] == doctest::Approx(start.w1[i] - 1e-5 * g.w1[i]).epsilon(1e-12));
    }
    for (size_t i = 0; i < start.b2.size(); ++i) {
        CHECK(after.b2[i] == doctest::Approx(start.b2[i] - 1e-5 * g.b2[i]).epsilon(1e-12));
    }
}

TEST_CASE("train_stage: fine-tuning continues from the given parameters") {
    Rng rng(61);
    EmbeddingPairSet pairs = random_pairs(rng, 12, 4);
    MapperParams pretrained = init_params(4, 9);
    pretrained.b2[0] = 0.75; // marker that must survive (no re-initialization)
    TrainConfig fine = default_finetune_config();
    fine.optimizer = Optimizer::sgd;
    fine.batch_size = 100;
    auto [after, report] = train_stage(pretrained, pairs, fine);
    (void)report;
    // 3 full-batch sgd steps at lr 1e-5: each entry moves at most
    // 3 * lr * max|gradient|, so the marker stays close to its start.
    CHECK(std::abs(after.b2[0] - 0.75) < 3 * 1e-5 * 100.0);
    CHECK(after.b2[0] != 0.0);
}

TEST_CASE("train_stage: divergence raises an error") {
    Rng rng(67);
    EmbeddingPairSet pairs = random_pairs(rng, 8, 3);
    TrainConfig config;
    config.optimizer = Optimizer::sgd;
    config.learning_rate = 1e12;
    config.epochs = 50;
    CHECK_THROWS_WITH_AS(train_stage(init_params(3, 5), pairs, config),
                         doctest::Contains("diverged"), Error);
}

TEST_CASE("train_stage: realizable task drives the loss down") {
    Rng rng(71);
    MapperParams teacher = init_params(5, 77);
    teacher.b2 = {0.1, -0.2, 0.3, 0.0, 0.05};
    EmbeddingPairSet pairs;
    pairs.dim = 5;
    for (int i = 0; i < 150; ++i) {
        Embedding e = random_embedding(rng, 5);
        pairs.pairs.emplace_back(e, forward(teacher, e));
    }
    TrainConfig config;
    config.epochs = 30;
    config.learning_rate = 5e-4;
    config.seed = 13;
    auto [params, report] = train_stage(init_params(5, 14), pairs, config);
    (void)params;
    CHECK(report.final_loss < report.epoch_losses.front());
}
