#include "doctest.h"

#include <cmath>

#include "eegart/attention/cbam.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace eegart::nn;
using namespace eegart::attention;
using eegart::Rng;
using testsupport::grad_check;
using testsupport::random_tensor;

namespace {

void randomize(ParamStore<double>& store, Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (const auto& e : store.entries())
    for (auto& v : e.var.node()->value.data()) v = rng.uniform(lo, hi);
}

oracle::CbamParams params_of(const Cbam<double>& c, std::size_t C) {
  oracle::CbamParams p;
  p.C = C;
  p.H = c.channel.fc1.weight.dim(0);
  p.w1 = c.channel.fc1.weight.value().storage();
  p.b1 = c.channel.fc1.bias.value().storage();
  p.w2 = c.channel.fc2.weight.value().storage();
  p.b2 = c.channel.fc2.bias.value().storage();
  p.ws = c.spatial.conv.weight.value().storage();
  p.bs = c.spatial.conv.bias.value()[0];
  return p;
}

}  // namespace

TEST_CASE("cbam parameter layout") {
  ParamStore<double> store;
  Cbam<double>::create(store, "blk", 32, 8, 1);
  CHECK(store.find("blk.channel.mlp1.weight").shape() == Shape{4, 32});
  CHECK(store.find("blk.channel.mlp1.bias").shape() == Shape{4});
  CHECK(store.find("blk.channel.mlp2.weight").shape() == Shape{32, 4});
  CHECK(store.find("blk.spatial.conv.weight").shape() == Shape{1, 2, 7});
  CHECK(store.find("blk.spatial.conv.bias").shape() == Shape{1});
  CHECK(store.parameter_count() == 4 * 32 + 4 + 32 * 4 + 32 + 14 + 1);
  CHECK(ChannelAttention<double>::hidden_width(4, 8) == 1);
  CHECK_THROWS_AS(ChannelAttention<double>::hidden_width(4, 0), std::invalid_argument);
}

TEST_CASE("cbam matches loop reference on random instances") {
  Rng rng(77);
  double worst_mc = 0, worst_ms = 0, worst_out = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t B = 1 + rng.index(3), C = 1 + rng.index(12), L = 1 + rng.index(40);
    const std::size_t ratio = 1 + rng.index(8);
    ParamStore<double> store;
    const auto cbam = Cbam<double>::create(store, "c", C, ratio, trial);
    randomize(store, rng);
    const auto x = random_tensor({B, C, L}, rng, -2.0, 2.0);
    const Var<double> xv(x);
    const auto mc = cbam.channel(xv).value();
    const auto ms = cbam.spatial(xv).value();
    const auto out = cbam(xv).value();
    REQUIRE(mc.shape() == Shape{B, C, 1});
    REQUIRE(ms.shape() == Shape{B, 1, L});
    REQUIRE(out.shape() == Shape{B, C, L});
    const auto p = params_of(cbam, C);
    for (std::size_t b = 0; b < B; ++b) {
      const oracle::Vec f(x.ptr() + b * C * L, x.ptr() + (b + 1) * C * L);
      const auto rc = oracle::channel_attention(f, L, p);
      const auto rs = oracle::spatial_attention(f, C, L, p);
      const auto ro = oracle::cbam(f, L, p);
      for (std::size_t c = 0; c < C; ++c) worst_mc = std::max(worst_mc, std::abs(rc[c] - mc[b * C + c]));
      for (std::size_t l = 0; l < L; ++l) worst_ms = std::max(worst_ms, std::abs(rs[l] - ms[b * L + l]));
      for (std::size_t i = 0; i < C * L; ++i)
        worst_out = std::max(worst_out, std::abs(ro[i] - out[b * C * L + i]));
    }
  }
  CHECK(worst_mc < 1e-10);
  CHECK(worst_ms < 1e-10);
  CHECK(worst_out < 1e-10);
}

TEST_CASE("attention weights lie in (0, 1)") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    ParamStore<double> store;
    const auto cbam = Cbam<double>::create(store, "c", 8, 4, trial);
    randomize(store, rng, -0.5, 0.5);
    const Var<double> x(random_tensor({2, 8, 25}, rng, -2.0, 2.0));
    // Bind results first: a range-for over `f().value().data()` would outlive the Var.
    const auto mc = cbam.channel(x).value(), ms = cbam.spatial(x).value();
    for (double v : mc.data()) CHECK_MESSAGE((v > 0.0 && v < 1.0), v);
    for (double v : ms.data()) CHECK_MESSAGE((v > 0.0 && v < 1.0), v);
    // Saturation may round to the closed interval but never beyond it.
    randomize(store, rng, -3.0, 3.0);
    const Var<double> big(random_tensor({2, 8, 25}, rng, -50.0, 50.0));
    const auto bc = cbam.channel(big).value(), bs = cbam.spatial(big).value();
    for (double v : bc.data()) CHECK_MESSAGE((v >= 0.0 && v <= 1.0), v);
    for (double v : bs.data()) CHECK_MESSAGE((v >= 0.0 && v <= 1.0), v);
  }
}

TEST_CASE("cbam with zero parameters scales its input by a quarter") {
  Rng rng(11);
  ParamStore<double> store;
  const auto cbam = Cbam<double>::create(store, "c", 16, 8, 3);
  for (const auto& e : store.entries()) e.var.node()->value.fill(0.0);
  const auto x = random_tensor({3, 16, 40}, rng, -5.0, 5.0);
  const auto y = cbam(Var<double>(x)).value();
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(0.25 * x[i]).epsilon(1e-15));
}

TEST_CASE("cbam gradients match finite differences") {
  Rng rng(21);
  ParamStore<double> store;
  const auto cbam = Cbam<double>::create(store, "c", 6, 2, 9);
  randomize(store, rng);
  Var<double> x(random_tensor({2, 6, 13}, rng, -2.0, 2.0), true);
  Rng prng(3);
  const auto r = random_tensor({2, 6, 13}, prng);
  auto loss = [&] { return weighted_sum(cbam(x), r); };
  std::vector<std::pair<std::string, Var<double>>> inputs{{"x", x}};
  for (const auto& e : store.entries()) inputs.emplace_back(e.name, e.var);
  CHECK_GRAD(grad_check(loss, inputs, {1e-6, 16, 5}), 1e-4);
}

TEST_CASE("attention map hand example") {
  Tensor<double> a({1, 3}, {0, 1, 2});
  const auto m = activation_attention_map(a, 0.5, 0.0);
  CHECK(m.edge_steps == 0);
  CHECK(m.values[0] == 0.0);
  CHECK(m.values[1] == doctest::Approx(1.0 / 16.0));
  CHECK(m.values[2] == 1.0);
  CHECK_FALSE(m.degenerate);
  CHECK(m.raw == std::vector<double>{0, 1, 16});
}

TEST_CASE("attention map edge exclusion") {
  CHECK(edge_exclusion_steps(40, 0.5, 0.7) == 2);
  CHECK(edge_exclusion_steps(40, 0.25, 0.5) == 2);
  CHECK(edge_exclusion_steps(40, 0.5, 0.0) == 0);
  CHECK(edge_exclusion_steps(4, 0.5, 0.7) == 0);
  CHECK(edge_exclusion_steps(5, 0.5, 0.7) == 2);
  CHECK_THROWS_AS(edge_exclusion_steps(40, 0.0, 0.7), std::invalid_argument);

  Rng rng(8);
  const auto a = random_tensor({4, 40}, rng);
  const auto m = activation_attention_map(a, 0.5);
  REQUIRE(m.size() == 40);
  CHECK(m.edge_steps == 2);
  CHECK(m.values[0] == 0.0);
  CHECK(m.values[1] == 0.0);
  CHECK(m.values[38] == 0.0);
  CHECK(m.values[39] == 0.0);
  double hi = 0, lo = 1;
  for (std::size_t l = 2; l < 38; ++l) {
    hi = std::max(hi, m.values[l]);
    lo = std::min(lo, m.values[l]);
  }
  CHECK(hi == 1.0);
  CHECK(lo == 0.0);
}

TEST_CASE("attention map matches reference and is bounded") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t C = 1 + rng.index(16), L = 3 + rng.index(60);
    const auto a = random_tensor({C, L}, rng, -3.0, 3.0);
    const double ts = 0.1 + rng.uniform(0.0, 1.0);
    const auto m = activation_attention_map(a, ts);
    const auto ref = oracle::attention_map(a.storage(), C, L, m.edge_steps);
    for (std::size_t l = 0; l < L; ++l) {
      CHECK(std::abs(m.values[l] - ref[l]) < 1e-12);
      CHECK((m.values[l] >= 0.0 && m.values[l] <= 1.0));
    }
  }
}

TEST_CASE("attention map is invariant to activation sign and positive scale") {
  Rng rng(4);
  auto a = random_tensor({5, 30}, rng);
  const auto m = activation_attention_map(a, 0.5);
  auto b = a;
  for (auto& v : b.data()) v = -3.0 * v;
  const auto mb = activation_attention_map(b, 0.5);
  for (std::size_t l = 0; l < 30; ++l) CHECK(mb.values[l] == doctest::Approx(m.values[l]).epsilon(1e-12));
}

TEST_CASE("flat or zero attention map is degenerate") {
  Tensor<double> zeros({3, 20});
  const auto m = activation_attention_map(zeros, 0.5);
  CHECK(m.degenerate);
  for (double v : m.values) CHECK(v == 0.0);
  Tensor<double> flat({2, 20});
  flat.fill(1.5);
  CHECK(activation_attention_map(flat, 0.5).degenerate);
  CHECK_THROWS_AS(activation_attention_map(Tensor<double>({3}), 0.5), std::invalid_argument);
}

TEST_CASE("attention map json round trip") {
  Rng rng(2);
  auto m = activation_attention_map(random_tensor({2, 40}, rng), 0.5);
  m.epoch_index = 17;
  const auto j = to_json(m);
  CHECK(j.at("epoch_index") == 17);
  CHECK(j.at("time_scale_s_per_step") == 0.5);
  CHECK(j.at("values").size() == 40);
  const auto back = attention_map_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.values == m.values);
  CHECK(back.epoch_index == 17);
  CHECK(back.edge_steps == 2);
}
