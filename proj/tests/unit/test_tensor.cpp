#include "doctest.h"

#include "eegart/nn/tensor.hpp"
#include "eegart/util/rng.hpp"

using eegart::nn::Tensor;

TEST_CASE("tensor size matches shape product") {
  Tensor<double> t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.rank() == 3);
  t.at(1, 2, 3) = 5.0;
  CHECK(t[23] == 5.0);
  CHECK_THROWS_AS(Tensor<double>({2, 2}, std::vector<double>(3)), std::invalid_argument);
  CHECK_THROWS_AS(t.reshaped({5, 5}), std::invalid_argument);
  CHECK(t.reshaped({24}).size() == 24);
}

TEST_CASE("rng is reproducible and seed-sensitive") {
  eegart::Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(a.next_u64() != c.next_u64());
  CHECK(eegart::derive_seed(1, "conv1") == eegart::derive_seed(1, "conv1"));
  CHECK(eegart::derive_seed(1, "conv1") != eegart::derive_seed(1, "conv2"));
}

TEST_CASE("rng normal has unit moments") {
  eegart::Rng r(5);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    s += v;
    s2 += v * v;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}
