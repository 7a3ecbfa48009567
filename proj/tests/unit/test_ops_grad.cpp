#include "doctest.h"

#include <cmath>
#include <numeric>

#include "eegart/nn/ops.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace eegart::nn;
using eegart::Rng;
using testsupport::grad_check;
using testsupport::random_tensor;

namespace {

Var<double> param(Tensor<double> t) { return Var<double>(std::move(t), true); }

// Loss = sum(y * r) with fixed random r so every output coordinate matters.
Var<double> probe(const Var<double>& y, std::uint64_t seed = 99) {
  Rng rng(seed);
  return weighted_sum(y, random_tensor(y.shape(), rng));
}

constexpr double kTol = 1e-4;

}  // namespace

TEST_CASE("conv1d hand examples") {
  Var<double> x(Tensor<double>({1, 1, 4}, {1, 1, 1, 1}));
  Var<double> id(Tensor<double>({1, 1, 1}, {1}));
  CHECK(conv1d(x, id, Var<double>(), {}).value().storage() == std::vector<double>{1, 1, 1, 1});

  Var<double> x2(Tensor<double>({1, 1, 3}, {1, 2, 3}));
  Var<double> w2(Tensor<double>({1, 1, 2}, {1, 1}));
  CHECK(conv1d(x2, w2, Var<double>(), {}).value().storage() == std::vector<double>{3, 5});

  Var<double> bad(Tensor<double>({1, 2, 2}));
  CHECK_THROWS_AS(conv1d(x2, bad, Var<double>(), {}), std::invalid_argument);
  Var<double> too_long(Tensor<double>({1, 1, 5}));
  CHECK_THROWS_AS(conv1d(x2, too_long, Var<double>(), {}), std::invalid_argument);
}

TEST_CASE("conv1d matches nested-loop reference on random instances") {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t B = 1 + rng.index(3), C = 1 + rng.index(4), K = 1 + rng.index(5);
    const std::size_t S = 1 + rng.index(7), stride = 1 + rng.index(3);
    const std::size_t L = S + rng.index(30);
    const std::size_t pl = rng.index(S), pr = rng.index(S);
    const bool circular = trial % 3 == 0 && pl < L && pr < L;
    auto x = random_tensor({B, C, L}, rng);
    auto w = random_tensor({K, C, S}, rng);
    auto b = random_tensor({K}, rng);
    Conv1dOptions opt{stride, pl, pr, circular ? PadMode::circular : PadMode::zeros};
    const auto y = conv1d(Var<double>(x), Var<double>(w), Var<double>(b), opt).value();
    std::size_t lo = 0;
    const auto ref = oracle::conv1d(x.storage(), B, C, L, w.storage(), K, S, b.storage(), stride,
                                    pl, pr, circular, &lo);
    REQUIRE(y.shape() == Shape{B, K, lo});
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(y[i] - ref[i]));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("backward of a linear form gives the fixed input") {
  Var<double> w = param(Tensor<double>({3}, {0.5, -1.0, 2.0}));
  const Tensor<double> x({3}, {4.0, 5.0, 6.0});
  backward(weighted_sum(w, x));
  CHECK(w.grad().storage() == x.storage());
}

TEST_CASE("backward without a recorded graph is an error") {
  Var<double> w = param(Tensor<double>({2}, {1, 2}));
  Var<double> loss;
  {
    NoGradGuard ng;
    loss = sum(w);
  }
  CHECK_THROWS_AS(backward(loss), std::logic_error);
  Var<double> loss2 = sum(w);
  backward(loss2);
  CHECK_THROWS_AS(backward(loss2), std::logic_error);
  CHECK_THROWS_AS(backward(Var<double>(Tensor<double>({1}, {1.0}))), std::logic_error);
}

TEST_CASE("gradient check: conv1d with zero and circular padding, strides") {
  Rng rng(1);
  for (PadMode mode : {PadMode::zeros, PadMode::circular}) {
    for (std::size_t stride : {1u, 2u, 3u}) {
      auto x = param(random_tensor({2, 3, 17}, rng));
      auto w = param(random_tensor({4, 3, 5}, rng));
      auto b = param(random_tensor({4}, rng));
      Conv1dOptions opt{stride, 2, 3, mode};
      auto r = grad_check([&] { return probe(conv1d(x, w, b, opt)); },
                          {{"x", x}, {"w", w}, {"b", b}});
      CHECK_GRAD(r, kTol);
    }
  }
}

TEST_CASE("gradient check: dense, sigmoid, tanh, softmax, cross-entropy") {
  Rng rng(2);
  auto x = param(random_tensor({5, 7}, rng));
  auto w = param(random_tensor({3, 7}, rng));
  auto b = param(random_tensor({3}, rng));
  auto r = grad_check([&] { return probe(sigmoid(linear(x, w, b))); },
                      {{"x", x}, {"w", w}, {"b", b}});
  CHECK_GRAD(r, kTol);
  r = grad_check([&] { return probe(tanh(linear(x, w, b))); }, {{"x", x}, {"w", w}});
  CHECK_GRAD(r, kTol);
  r = grad_check([&] { return probe(softmax(linear(x, w, b))); }, {{"x", x}, {"w", w}});
  CHECK_GRAD(r, kTol);
  const std::vector<int> labels{0, 2, 1, 1, 0};
  r = grad_check([&] { return softmax_cross_entropy(linear(x, w, b), labels); },
                 {{"x", x}, {"w", w}, {"b", b}});
  CHECK_GRAD(r, kTol);
}

TEST_CASE("gradient check: batch norm in training and evaluation mode") {
  Rng rng(3);
  auto x = param(random_tensor({4, 3, 6}, rng));
  auto g = param(random_tensor({3}, rng, 0.5, 1.5));
  auto be = param(random_tensor({3}, rng));
  Tensor<double> rm({3}), rv({3}, 1.0);
  for (bool training : {true, false}) {
    auto r = grad_check(
        [&] { return probe(batch_norm(x, g, be, rm, rv, training, 0.9, 1e-5)); },
        {{"x", x}, {"gamma", g}, {"beta", be}});
    CHECK_GRAD(r, kTol);
  }
  auto x2 = param(random_tensor({6, 4}, rng));
  auto g2 = param(random_tensor({4}, rng));
  auto b2 = param(random_tensor({4}, rng));
  Tensor<double> rm2({4}), rv2({4}, 1.0);
  auto r = grad_check([&] { return probe(batch_norm(x2, g2, b2, rm2, rv2, true, 0.9, 1e-5)); },
                      {{"x", x2}, {"gamma", g2}, {"beta", b2}});
  CHECK_GRAD(r, kTol);
}

TEST_CASE("gradient check: relu, max pooling, reductions, broadcasting") {
  Rng rng(4);
  auto x = param(random_tensor({2, 3, 12}, rng));
  auto r = grad_check([&] { return probe(max_pool1d(relu(x), 4)); }, {{"x", x}});
  CHECK_GRAD(r, kTol);
  r = grad_check([&] { return probe(mean_axis(x, 1)); }, {{"x", x}});
  CHECK_GRAD(r, kTol);
  r = grad_check([&] { return probe(max_axis(x, 2)); }, {{"x", x}});
  CHECK_GRAD(r, kTol);
  auto s = param(random_tensor({2, 3, 1}, rng));
  auto t = param(random_tensor({2, 1, 12}, rng));
  r = grad_check([&] { return probe(mul(mul(x, s), t)); }, {{"x", x}, {"s", s}, {"t", t}});
  CHECK_GRAD(r, kTol);
  auto y = param(random_tensor({2, 3, 12}, rng));
  r = grad_check([&] { return probe(add(scale(x, 0.3), y)); }, {{"x", x}, {"y", y}});
  CHECK_GRAD(r, kTol);
  r = grad_check(
      [&] { return probe(reshape(transpose12(concat<double>({x, y}, 1)), {2, 12 * 6})); },
      {{"x", x}, {"y", y}});
  CHECK_GRAD(r, kTol);
}

TEST_CASE("gradient check: bidirectional LSTM") {
  Rng rng(5);
  const std::size_t D = 3, H = 4;
  auto x = param(random_tensor({2, 5, D}, rng));
  std::vector<Var<double>> p;
  for (int d = 0; d < 2; ++d) {
    p.push_back(param(random_tensor({4 * H, D}, rng, -0.5, 0.5)));
    p.push_back(param(random_tensor({4 * H, H}, rng, -0.5, 0.5)));
    p.push_back(param(random_tensor({4 * H}, rng, -0.5, 0.5)));
  }
  auto r = grad_check([&] { return probe(bilstm(x, p[0], p[1], p[2], p[3], p[4], p[5])); },
                      {{"x", x},
                       {"wih_f", p[0]},
                       {"whh_f", p[1]},
                       {"b_f", p[2]},
                       {"wih_b", p[3]},
                       {"whh_b", p[4]},
                       {"b_b", p[5]}});
  CHECK_GRAD(r, kTol);
}

TEST_CASE("bilstm matches per-step reference cell") {
  Rng rng(6);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t B = 1 + rng.index(2), T = 1 + rng.index(6), D = 1 + rng.index(4),
                      H = 1 + rng.index(4);
    auto x = random_tensor({B, T, D}, rng);
    oracle::Vec wi[2], wh[2], bb[2];
    std::vector<Var<double>> p;
    for (int d = 0; d < 2; ++d) {
      auto a = random_tensor({4 * H, D}, rng), b = random_tensor({4 * H, H}, rng),
           c = random_tensor({4 * H}, rng);
      wi[d] = a.storage();
      wh[d] = b.storage();
      bb[d] = c.storage();
      p.emplace_back(a);
      p.emplace_back(b);
      p.emplace_back(c);
    }
    const auto y = bilstm(Var<double>(x), p[0], p[1], p[2], p[3], p[4], p[5]).value();
    const auto ref = oracle::bilstm(x.storage(), B, T, D, H, wi, wh, bb);
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(y[i] - ref[i]));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("bilstm special cases") {
  const std::size_t H = 3, D = 2;
  std::vector<Var<double>> zero;
  for (int d = 0; d < 2; ++d) {
    zero.emplace_back(Tensor<double>({4 * H, D}));
    zero.emplace_back(Tensor<double>({4 * H, H}));
    zero.emplace_back(Tensor<double>({4 * H}));
  }
  const auto y = bilstm(Var<double>(Tensor<double>({1, 4, D})), zero[0], zero[1], zero[2],
                        zero[3], zero[4], zero[5]);
  for (double v : y.value().data()) CHECK(v == 0.0);

  // T = 1: both directions see the same single step, so equal weights give equal halves.
  Rng rng(8);
  auto wi = random_tensor({4 * H, D}, rng), wh = random_tensor({4 * H, H}, rng),
       b = random_tensor({4 * H}, rng);
  const auto x = random_tensor({1, 1, D}, rng);
  const auto y1 = bilstm(Var<double>(x), Var<double>(wi), Var<double>(wh), Var<double>(b),
                         Var<double>(wi), Var<double>(wh), Var<double>(b))
                      .value();
  for (std::size_t j = 0; j < H; ++j) CHECK(y1[j] == y1[H + j]);
  CHECK_THROWS_AS(bilstm(Var<double>(Tensor<double>({1, 0, D})), zero[0], zero[1], zero[2],
                         zero[3], zero[4], zero[5]),
                  std::invalid_argument);
}

TEST_CASE("softmax rows sum to one and sigmoid stays in (0,1)") {
  Rng rng(9);
  auto x = random_tensor({16, 5}, rng, -50, 50);
  const auto s = softmax(Var<double>(x)).value();
  for (std::size_t i = 0; i < 16; ++i) {
    double total = 0;
    for (std::size_t j = 0; j < 5; ++j) total += s.at(i, j);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto sg = sigmoid(Var<double>(random_tensor({100}, rng, -30, 30))).value();
  for (double v : sg.data()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("batch norm statistics and running buffers") {
  Rng rng(10);
  auto x = random_tensor({8, 3, 20}, rng, -3, 7);
  Var<double> g(Tensor<double>({3}, 1.0)), b(Tensor<double>({3}, 0.0));
  Tensor<double> rm({3}), rv({3}, 1.0);
  const auto y = batch_norm(Var<double>(x), g, b, rm, rv, true, 0.9, 1e-5).value();
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t l = 0; l < 20; ++l) m += y.at(i, c, l);
    m /= 160;
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t l = 0; l < 20; ++l) v += (y.at(i, c, l) - m) * (y.at(i, c, l) - m);
    v /= 160;
    CHECK(std::abs(m) < 1e-12);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(rm[c] != 0.0);
  }
  const auto e1 = batch_norm(Var<double>(x), g, b, rm, rv, false, 0.9, 1e-5).value();
  const auto e2 = batch_norm(Var<double>(x), g, b, rm, rv, false, 0.9, 1e-5).value();
  CHECK(e1 == e2);
}

TEST_CASE("max pooling routes gradient only to argmax positions") {
  Var<double> x = param(Tensor<double>({1, 1, 6}, {1, 5, 2, 7, 3, 0}));
  backward(sum(max_pool1d(x, 2)));
  CHECK(x.grad().storage() == std::vector<double>{0, 1, 0, 1, 1, 0});
}

TEST_CASE("dropout: eval mode is the identity graph; train mode is unbiased") {
  Rng rng(11);
  auto w = param(random_tensor({1, 10}, rng));
  auto xin = random_tensor({1, 10}, rng);
  auto a = param(xin), c = param(xin);
  backward(sum(linear(dropout(a, 0.5, false, nullptr), w, Var<double>())));
  backward(sum(linear(c, w, Var<double>())));
  CHECK(a.grad() == c.grad());

  const Var<double> xv(xin);
  const double expected = linear(xv, w, Var<double>()).value()[0];
  double acc = 0;
  const int n = 40000;
  NoGradGuard ng;
  for (int i = 0; i < n; ++i) acc += linear(dropout(xv, 0.5, true, &rng), w, Var<double>()).value()[0];
  CHECK(std::abs(acc / n - expected) < 0.02);
  CHECK_THROWS_AS(dropout(xv, 1.0, true, &rng), std::invalid_argument);
}

TEST_CASE("gradient check treats an input outside the graph as zero gradient") {
  Rng rng(12);
  auto x = param(random_tensor({2, 5}, rng));
  auto unused = param(random_tensor({3}, rng));
  const auto r = grad_check([&] { return probe(tanh(x)); }, {{"x", x}, {"unused", unused}});
  CHECK_GRAD(r, kTol);
  CHECK(r.checked == 13);
}
