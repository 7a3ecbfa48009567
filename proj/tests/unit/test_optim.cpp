#include "doctest.h"

#include <cmath>

#include "eegart/nn/optim.hpp"

using namespace eegart::nn;

TEST_CASE("zero gradient leaves parameters unchanged") {
  std::vector<double> p{1.0, -2.0, 3.0};
  const std::vector<double> g(3, 0.0);
  AdamState<double> s;
  for (int i = 0; i < 10; ++i) adam_step<double>(p, g, s, {});
  CHECK(p == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("first step with constant gradient moves by about lr") {
  // Bias-corrected first step: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps).
  for (double g : {0.3, -7.0, 1e3}) {
    std::vector<double> p{0.0};
    const std::vector<double> grad{g};
    AdamState<double> s;
    AdamConfig cfg;
    cfg.lr = 1e-3;
    adam_step<double>(p, grad, s, cfg);
    const double expected = -cfg.lr * g / (std::abs(g) + cfg.eps);
    CHECK(p[0] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("quadratic bowl converges") {
  std::vector<double> w{1.0};
  AdamState<double> s;
  AdamConfig cfg;
  cfg.lr = 0.05;
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> g{2.0 * w[0]};
    adam_step<double>(w, g, s, cfg);
  }
  CHECK(std::abs(w[0]) < 1e-2);
}

TEST_CASE("non-finite gradient aborts with a diagnostic and no update") {
  Var<double> a(Tensor<double>({2}, {1.0, 2.0}), true);
  Var<double> b(Tensor<double>({3}, {1.0, 2.0, 3.0}), true);
  Adam<double> opt({a, b}, {}, {"layer.a", "layer.b"});
  a.mutable_grad().fill(1.0);
  b.mutable_grad()[2] = std::nan("");
  try {
    opt.step();
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("layer.b") != std::string::npos);
    CHECK(msg.find("index 2") != std::string::npos);
  }
  CHECK(a.value().storage() == std::vector<double>{1.0, 2.0});
}
