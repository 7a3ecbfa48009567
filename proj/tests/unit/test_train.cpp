#include "doctest.h"

#include <cmath>

#include "eegart/nn/train.hpp"

using namespace eegart::nn;

namespace {

// Small conv + two-layer head, enough to separate the toy task below.
class TinyNet : public Classifier<float> {
 public:
  explicit TinyNet(std::uint64_t seed) {
    conv_ = Conv1dLayer<float>::create(store_, "conv", 1, 4, 5, {1, 2, 2, PadMode::zeros}, seed);
    bn_ = BatchNormLayer<float>::create(store_, "bn", 4);
    fc1_ = DenseLayer<float>::create(store_, "fc1", 4, 4, seed);
    fc2_ = DenseLayer<float>::create(store_, "fc2", 4, 2, seed);
  }
  ParamStore<float>& store() override { return store_; }
  Var<float> forward(const Tensor<float>& x, ForwardContext<float>& ctx) const override {
    auto h = relu(bn_(conv_(Var<float>(x)), ctx.training));
    h = reshape(mean_axis(h, 2), {x.dim(0), 4});
    h = dropout(h, 0.25, ctx.training, ctx.rng);
    return fc2_(relu(fc1_(h)));
  }
  std::vector<Var<float>> conv_params() const { return store_.parameters_with_prefix("conv"); }
  std::vector<Var<float>> features() const {
    auto v = store_.parameters_with_prefix("conv");
    for (auto& p : store_.parameters_with_prefix("bn")) v.push_back(p);
    return v;
  }
  std::vector<Var<float>> head() const {
    auto v = store_.parameters_with_prefix("fc1");
    for (auto& p : store_.parameters_with_prefix("fc2")) v.push_back(p);
    return v;
  }

 private:
  ParamStore<float> store_;
  Conv1dLayer<float> conv_;
  BatchNormLayer<float> bn_;
  DenseLayer<float> fc1_, fc2_;
};

// Class 1: a burst of large oscillation; class 0: low-level noise.
Samples toy_set(std::size_t n, std::uint64_t seed) {
  eegart::Rng rng(seed);
  Samples s;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    std::vector<float> x(32);
    for (std::size_t t = 0; t < 32; ++t) {
      x[t] = static_cast<float>(0.2 * rng.normal());
      if (label && t >= 10 && t < 20) x[t] += static_cast<float>(2.0 * std::sin(1.7 * t));
    }
    s.add(std::span<const float>(x), label);
  }
  return s;
}

}  // namespace

TEST_CASE("early stopping: strictly decreasing loss runs to the end") {
  const auto h = run_early_stopping(
      100, 20, [](std::size_t e) { return EpochLosses{1.0, 1.0 / static_cast<double>(e)}; },
      nullptr);
  CHECK(h.epochs.size() == 100);
  CHECK(h.best_epoch == 100);
  CHECK_FALSE(h.stopped_early);
}

TEST_CASE("early stopping: one improvement then a plateau stops at 1 + patience") {
  std::size_t improvements = 0;
  const auto h = run_early_stopping(
      100, 20, [](std::size_t) { return EpochLosses{1.0, 0.5}; },
      [&](std::size_t) { ++improvements; });
  CHECK(h.epochs.size() == 21);
  CHECK(h.best_epoch == 1);
  CHECK(improvements == 1);
  CHECK(h.stopped_early);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.patience = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.patience = 101;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.patience = 5;
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("training rejects empty sets") {
  TinyNet net(1);
  Samples empty;
  const auto s = toy_set(8, 1);
  TrainConfig cfg;
  CHECK_THROWS_AS(train(net, empty, s, cfg), std::invalid_argument);
  CHECK_THROWS_AS(train(net, s, empty, cfg), std::invalid_argument);
}

TEST_CASE("training learns the toy task, restores the best weights and is reproducible") {
  const auto tr = toy_set(96, 1), va = toy_set(48, 2);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 30;
  cfg.patience = 30;
  cfg.adam.lr = 1e-2;
  cfg.seed = 123;

  TinyNet a(7), b(7);
  const double before = evaluate_loss(a, va, 64);
  const auto ra = train(a, tr, va, cfg);
  const auto rb = train(b, tr, va, cfg);
  REQUIRE(ra.history.epochs.size() == rb.history.epochs.size());
  for (std::size_t i = 0; i < ra.history.epochs.size(); ++i) {
    CHECK(ra.history.epochs[i].train_loss == rb.history.epochs[i].train_loss);
    CHECK(ra.history.epochs[i].val_loss == rb.history.epochs[i].val_loss);
  }
  CHECK(a.store().snapshot() == b.store().snapshot());
  const double after = evaluate_loss(a, va, 64);
  CHECK(after < before);
  CHECK(after == doctest::Approx(ra.history.best_val_loss).epsilon(1e-6));
  const auto p = predict_positive(a, va, 64);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.size(); ++i) correct += (p[i] > 0.5) == (va.labels[i] == 1);
  CHECK(correct >= 40);
}

TEST_CASE("dual optimizer freezes each partition in turn") {
  const auto tr = toy_set(64, 3), va = toy_set(32, 4);
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 15;
  cfg.patience = 15;
  cfg.adam.lr = 1e-2;
  cfg.seed = 5;

  TinyNet net(9);
  std::vector<Tensor<float>> head_init;
  for (const auto& p : net.head()) head_init.push_back(p.value());

  // Phase 1 alone, to inspect the frozen head.
  TinyNet phase1(9);
  const auto r1 = train(phase1, tr, va, cfg, phase1.features());
  for (std::size_t i = 0; i < head_init.size(); ++i) CHECK(phase1.head()[i].value() == head_init[i]);

  const auto r = train_dual_optimizer(net, tr, va, cfg, net.features(), net.head());
  CHECK(r.features.history.epochs.size() == r1.history.epochs.size());
  // After phase 2 the convolutional part equals the phase-1 result.
  const auto f1 = phase1.features(), f2 = net.features();
  for (std::size_t i = 0; i < f1.size(); ++i) CHECK(f1[i].value() == f2[i].value());
  CHECK(r.head.history.best_val_loss <= r.features.history.best_val_loss);

  CHECK_THROWS_AS(train_dual_optimizer(net, tr, va, cfg, {}, net.head()), std::invalid_argument);
}
