#pragma once

// Central finite-difference gradient checking for the double-precision graph.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "eegart/nn/autograd.hpp"
#include "eegart/util/rng.hpp"

namespace testsupport {

using eegart::nn::Var;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  std::string worst;  // "tensor[index]" of the largest error
};

struct GradCheckOptions {
  double step = 1e-5;
  std::size_t samples_per_tensor = 12;  // coordinates drawn per input tensor
  std::uint64_t seed = 7;
};

inline double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

// `loss` rebuilds the scalar graph from the current values of `inputs`.
// A coordinate whose two one-sided differences disagree sits on a
// non-differentiable point (ReLU/max kink) within the step; it is replaced by
// another draw and counted in skipped_kinks.
inline GradCheckResult grad_check(const std::function<Var<double>()>& loss,
                                  std::vector<std::pair<std::string, Var<double>>> inputs,
                                  GradCheckOptions opt = {}) {
  for (auto& [name, v] : inputs) v.zero_grad();
  const Var<double> out = loss();
  const double f0 = out.value()[0];
  eegart::nn::backward(out);

  GradCheckResult r;
  eegart::Rng rng(opt.seed);
  for (auto& [name, v] : inputs) {
    // An input the graph never reached has no grad buffer; its gradient is zero.
    const bool reached = v.has_grad();
    const auto analytic = v.grad();
    auto& values = v.mutable_value();
    const std::size_t n = values.size();
    std::vector<std::size_t> coords;
    if (n <= opt.samples_per_tensor) {
      for (std::size_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
      for (std::size_t i = 0; i < opt.samples_per_tensor; ++i) coords.push_back(rng.index(n));
    }
    std::size_t budget = 4 * opt.samples_per_tensor;
    for (std::size_t c = 0; c < coords.size(); ++c) {
      const std::size_t i = coords[c];
      const double saved = values[i];
      double fp, fm;
      {
        eegart::nn::NoGradGuard ng;
        values[i] = saved + opt.step;
        fp = loss().value()[0];
        values[i] = saved - opt.step;
        fm = loss().value()[0];
      }
      values[i] = saved;
      const double numeric = (fp - fm) / (2 * opt.step);
      const double right = (fp - f0) / opt.step;
      const double left = (f0 - fm) / opt.step;
      if (rel_error(right, left) > 1e-2 && std::abs(right - left) > 1e-7) {
        ++r.skipped_kinks;
        if (budget > 0 && n > opt.samples_per_tensor) {
          --budget;
          coords.push_back(rng.index(n));
        }
        continue;
      }
      const double a = reached ? analytic[i] : 0.0;
      const double e = rel_error(a, numeric);
      ++r.checked;
      if (e > r.max_rel_error) {
        r.max_rel_error = e;
        r.worst = name + "[" + std::to_string(i) + "] analytic=" + std::to_string(a) +
                  " numeric=" + std::to_string(numeric);
      }
    }
  }
  return r;
}

// Random tensor with entries uniform in [lo, hi).
inline eegart::nn::Tensor<double> random_tensor(eegart::nn::Shape shape, eegart::Rng& rng,
                                                double lo = -1.0, double hi = 1.0) {
  eegart::nn::Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace testsupport

// Passes when errors are within tolerance and kink skips stayed rare.
#define CHECK_GRAD(result, tol)                                  \
  do {                                                           \
    const auto& gc_ = (result);                                  \
    INFO(gc_.worst);                                             \
    CHECK(gc_.max_rel_error < (tol));                            \
    CHECK(gc_.checked > 0);                                      \
    CHECK(gc_.skipped_kinks * 4 <= gc_.checked);                 \
  } while (0)
