#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "eegart/nn/autograd.hpp"

namespace eegart::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::size_t step = 0;  // number of updates applied so far
};

// One bias-corrected Adam update of `params` in place. The state vectors are
// sized on first use. Throws std::runtime_error naming the offending index
// when a gradient is not finite; nothing is updated in that case.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state,
               const AdamConfig& cfg);

// Adam over a fixed set of parameter Vars, each with its own state.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Var<T>> params, AdamConfig cfg, std::vector<std::string> names = {});

  // Applies one update from the parameters' current gradients. All gradients
  // are checked for NaN/Inf before any parameter changes.
  void step();
  void zero_grad();
  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Var<T>> params_;
  std::vector<std::string> names_;
  std::vector<AdamState<T>> states_;
  AdamConfig cfg_;
  std::size_t steps_ = 0;
};

}  // namespace eegart::nn
