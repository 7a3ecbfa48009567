#include "eegart/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace eegart::nn {

template <typename T>
Var<T> ParamStore<T>::parameter(std::string name, Tensor<T> init) {
  for (const auto& e : entries_)
    if (e.name == name) throw std::invalid_argument("duplicate parameter name: " + name);
  Var<T> v(std::move(init), true);
  entries_.push_back({std::move(name), v, true});
  return v;
}

template <typename T>
Var<T> ParamStore<T>::buffer(std::string name, Tensor<T> init) {
  for (const auto& e : entries_)
    if (e.name == name) throw std::invalid_argument("duplicate buffer name: " + name);
  Var<T> v(std::move(init), false);
  entries_.push_back({std::move(name), v, false});
  return v;
}

template <typename T>
std::vector<Var<T>> ParamStore<T>::parameters() const {
  std::vector<Var<T>> out;
  for (const auto& e : entries_)
    if (e.trainable) out.push_back(e.var);
  return out;
}

template <typename T>
std::vector<Var<T>> ParamStore<T>::parameters_with_prefix(std::string_view prefix) const {
  std::vector<Var<T>> out;
  for (const auto& e : entries_)
    if (e.trainable && std::string_view(e.name).substr(0, prefix.size()) == prefix)
      out.push_back(e.var);
  return out;
}

template <typename T>
Var<T> ParamStore<T>::find(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.var;
  throw std::out_of_range("no parameter named " + std::string(name));
}

template <typename T>
std::size_t ParamStore<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (e.trainable) n += e.var.value().size();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& e : entries_) e.var.zero_grad();
}

template <typename T>
std::vector<Tensor<T>> ParamStore<T>::snapshot() const {
  std::vector<Tensor<T>> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.var.value());
  return out;
}

template <typename T>
void ParamStore<T>::restore(const std::vector<Tensor<T>>& state) {
  if (state.size() != entries_.size()) throw std::invalid_argument("restore: entry count");
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state[i].shape() != entries_[i].var.shape()) {
      throw std::invalid_argument("restore: shape mismatch for " + entries_[i].name);
    }
    entries_[i].var.mutable_value() = state[i];
  }
}

template <typename T>
Tensor<T> kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor<T> t(std::move(shape));
  for (auto& v : t.storage()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
Tensor<T> orthogonal(std::size_t n, Rng& rng) {
  std::vector<double> m(n * n);
  for (auto& v : m) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    double* ri = m.data() + i * n;
    for (std::size_t j = 0; j < i; ++j) {
      const double* rj = m.data() + j * n;
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += ri[k] * rj[k];
      for (std::size_t k = 0; k < n; ++k) ri[k] -= dot * rj[k];
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < n; ++k) norm += ri[k] * ri[k];
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < n; ++k) ri[k] /= norm;
  }
  return Tensor<T>({n, n}, std::vector<T>(m.begin(), m.end()));
}

template <typename T>
Conv1dLayer<T> Conv1dLayer<T>::create(ParamStore<T>& store, const std::string& name,
                                      std::size_t in, std::size_t out, std::size_t kernel,
                                      Conv1dOptions options, std::uint64_t seed) {
  Rng rng(derive_seed(seed, name));
  Conv1dLayer layer;
  layer.weight = store.parameter(name + ".weight",
                                 kaiming_uniform<T>({out, in, kernel}, in * kernel, rng));
  layer.bias = store.parameter(name + ".bias", Tensor<T>({out}));
  layer.options = options;
  return layer;
}

template <typename T>
DenseLayer<T> DenseLayer<T>::create(ParamStore<T>& store, const std::string& name,
                                    std::size_t in, std::size_t out, std::uint64_t seed) {
  Rng rng(derive_seed(seed, name));
  DenseLayer layer;
  layer.weight = store.parameter(name + ".weight", kaiming_uniform<T>({out, in}, in, rng));
  layer.bias = store.parameter(name + ".bias", Tensor<T>({out}));
  return layer;
}

template <typename T>
BatchNormLayer<T> BatchNormLayer<T>::create(ParamStore<T>& store, const std::string& name,
                                            std::size_t channels) {
  BatchNormLayer layer;
  layer.gamma = store.parameter(name + ".gamma", Tensor<T>({channels}, T{1}));
  layer.beta = store.parameter(name + ".beta", Tensor<T>({channels}));
  layer.running_mean = store.buffer(name + ".running_mean", Tensor<T>({channels}));
  layer.running_var = store.buffer(name + ".running_var", Tensor<T>({channels}, T{1}));
  return layer;
}

template <typename T>
BiLstmLayer<T> BiLstmLayer<T>::create(ParamStore<T>& store, const std::string& name,
                                      std::size_t input, std::size_t hidden, std::uint64_t seed) {
  BiLstmLayer layer;
  layer.hidden = hidden;
  const char* dirs[2] = {"fwd", "bwd"};
  for (int d = 0; d < 2; ++d) {
    const std::string base = name + "." + dirs[d];
    Rng rng(derive_seed(seed, base));
    const double bound = std::sqrt(6.0 / static_cast<double>(input + 4 * hidden));
    Tensor<T> wi({4 * hidden, input});
    for (auto& v : wi.storage()) v = static_cast<T>(rng.uniform(-bound, bound));
    Tensor<T> wh({4 * hidden, hidden});
    for (std::size_t gate = 0; gate < 4; ++gate) {
      const Tensor<T> q = orthogonal<T>(hidden, rng);
      std::copy(q.data().begin(), q.data().end(), wh.ptr() + gate * hidden * hidden);
    }
    Tensor<T> bias({4 * hidden});
    for (std::size_t j = 0; j < hidden; ++j) bias[hidden + j] = T{1};
    layer.w_ih[d] = store.parameter(base + ".w_ih", std::move(wi));
    layer.w_hh[d] = store.parameter(base + ".w_hh", std::move(wh));
    layer.b[d] = store.parameter(base + ".bias", std::move(bias));
  }
  return layer;
}

template class ParamStore<float>;
template class ParamStore<double>;
template Tensor<float> kaiming_uniform<float>(Shape, std::size_t, Rng&);
template Tensor<double> kaiming_uniform<double>(Shape, std::size_t, Rng&);
template Tensor<float> orthogonal<float>(std::size_t, Rng&);
template Tensor<double> orthogonal<double>(std::size_t, Rng&);
template struct Conv1dLayer<float>;
template struct Conv1dLayer<double>;
template struct DenseLayer<float>;
template struct DenseLayer<double>;
template struct BatchNormLayer<float>;
template struct BatchNormLayer<double>;
template struct BiLstmLayer<float>;
template struct BiLstmLayer<double>;

}  // namespace eegart::nn
