#include "doctest.h"

#include <cmath>

#include "eegart/nn/layers.hpp"

using namespace eegart::nn;

TEST_CASE("param store naming, lookup and snapshots") {
  ParamStore<double> store;
  auto conv = Conv1dLayer<double>::create(store, "c1", 2, 4, 3, {}, 17);
  auto bn = BatchNormLayer<double>::create(store, "bn1", 4);
  CHECK(store.entries().size() == 6);
  CHECK(store.parameters().size() == 4);
  CHECK(store.parameter_count() == 4 * 2 * 3 + 4 + 4 + 4);
  CHECK(store.find("c1.weight").node() == conv.weight.node());
  CHECK_THROWS_AS(store.find("nope"), std::out_of_range);
  CHECK_THROWS_AS(store.parameter("c1.weight", Tensor<double>({1})), std::invalid_argument);
  CHECK(store.parameters_with_prefix("bn1.").size() == 2);

  const auto snap = store.snapshot();
  conv.weight.mutable_value().fill(3.0);
  bn.running_mean.mutable_value().fill(2.0);
  store.restore(snap);
  CHECK(store.snapshot() == snap);
}

TEST_CASE("initialization depends only on seed and layer name") {
  ParamStore<float> a, b, c;
  auto la = Conv1dLayer<float>::create(a, "temporal.b1.conv", 1, 8, 16, {}, 5);
  DenseLayer<float>::create(b, "unrelated", 3, 3, 5);
  auto lb = Conv1dLayer<float>::create(b, "temporal.b1.conv", 1, 8, 16, {}, 5);
  auto lc = Conv1dLayer<float>::create(c, "temporal.b1.conv", 1, 8, 16, {}, 6);
  CHECK(la.weight.value() == lb.weight.value());
  CHECK(!(la.weight.value() == lc.weight.value()));
  const double bound = std::sqrt(6.0 / 16.0);
  for (float v : la.weight.value().data()) CHECK(std::abs(v) <= bound);
  for (float v : la.bias.value().data()) CHECK(v == 0.0f);
}

TEST_CASE("orthogonal rows are orthonormal") {
  eegart::Rng rng(3);
  const auto q = orthogonal<double>(6, rng);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      double dot = 0;
      for (std::size_t k = 0; k < 6; ++k) dot += q.at(i, k) * q.at(j, k);
      CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
    }
}

TEST_CASE("lstm init has forget bias one") {
  ParamStore<double> s;
  auto l = BiLstmLayer<double>::create(s, "lstm", 5, 3, 1);
  for (int d = 0; d < 2; ++d)
    for (std::size_t j = 0; j < 12; ++j) CHECK(l.b[d].value()[j] == ((j >= 3 && j < 6) ? 1.0 : 0.0));
  CHECK(s.find("lstm.bwd.w_hh").shape() == Shape{12, 3});
}
