#include "eegart/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace eegart::nn {

namespace {
template <typename T>
void check_finite(std::span<const T> grads, const std::string& name) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw std::runtime_error("adam: non-finite gradient " + std::to_string(grads[i]) + " in " +
                               (name.empty() ? std::string("parameter") : name) + " at index " +
                               std::to_string(i));
    }
  }
}
}  // namespace

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam: size mismatch");
  check_finite(grads, "");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), T{0});
    state.v.assign(params.size(), T{0});
    state.step = 0;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(cfg.beta1, t)));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(cfg.beta2, t)));
  const T lr = static_cast<T>(cfg.lr), eps = static_cast<T>(cfg.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    state.m[i] = b1 * state.m[i] + (T{1} - b1) * g;
    state.v[i] = b2 * state.v[i] + (T{1} - b2) * g * g;
    const T m_hat = state.m[i] * c1;
    const T v_hat = state.v[i] * c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

template <typename T>
Adam<T>::Adam(std::vector<Var<T>> params, AdamConfig cfg, std::vector<std::string> names)
    : params_(std::move(params)), names_(std::move(names)), states_(params_.size()), cfg_(cfg) {
  if (!(cfg_.lr > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  names_.resize(params_.size());
}

template <typename T>
void Adam<T>::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].has_grad()) check_finite<T>(params_[i].grad().data(), names_[i]);
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) p.mutable_grad();
    adam_step<T>(p.mutable_value().data(), p.grad().data(), states_[i], cfg_);
  }
  ++steps_;
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template void adam_step<float>(std::span<float>, std::span<const float>, AdamState<float>&,
                               const AdamConfig&);
template void adam_step<double>(std::span<double>, std::span<const double>, AdamState<double>&,
                                const AdamConfig&);
template class Adam<float>;
template class Adam<double>;

}  // namespace eegart::nn
