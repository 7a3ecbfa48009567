#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "eegart/nn/ops.hpp"

namespace eegart::nn {

// Named, ordered collection of a model's trainable parameters and
// non-trainable buffers (batch-norm running statistics).
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Var<T> var;
    bool trainable;
  };

  Var<T> parameter(std::string name, Tensor<T> init);
  Var<T> buffer(std::string name, Tensor<T> init);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Var<T>> parameters() const;
  std::vector<Var<T>> parameters_with_prefix(std::string_view prefix) const;
  // Throws std::out_of_range for unknown names.
  Var<T> find(std::string_view name) const;
  std::size_t parameter_count() const;
  void zero_grad();

  // Copies of every entry's value, in entry order.
  std::vector<Tensor<T>> snapshot() const;
  void restore(const std::vector<Tensor<T>>& state);

 private:
  std::vector<Entry> entries_;
};

template <typename T>
struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;                        // dropout masks, training only
  Tensor<T>* attention_capture = nullptr;    // receives the last temporal CBAM output
};

// Kaiming-uniform bound sqrt(6 / fan_in).
template <typename T>
Tensor<T> kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng);

// Rows of a square matrix made orthonormal (Gram-Schmidt on Gaussian rows).
template <typename T>
Tensor<T> orthogonal(std::size_t n, Rng& rng);

template <typename T>
struct Conv1dLayer {
  Var<T> weight;  // [out, in, kernel]
  Var<T> bias;    // [out]
  Conv1dOptions options;

  static Conv1dLayer create(ParamStore<T>& store, const std::string& name, std::size_t in,
                            std::size_t out, std::size_t kernel, Conv1dOptions options,
                            std::uint64_t seed);
  Var<T> operator()(const Var<T>& x) const { return conv1d(x, weight, bias, options); }
};

template <typename T>
struct DenseLayer {
  Var<T> weight;  // [out, in]
  Var<T> bias;    // [out]

  static DenseLayer create(ParamStore<T>& store, const std::string& name, std::size_t in,
                           std::size_t out, std::uint64_t seed);
  Var<T> operator()(const Var<T>& x) const { return linear(x, weight, bias); }
};

template <typename T>
struct BatchNormLayer {
  Var<T> gamma, beta;
  Var<T> running_mean, running_var;
  double momentum = 0.9;
  double eps = 1e-5;

  static BatchNormLayer create(ParamStore<T>& store, const std::string& name,
                               std::size_t channels);
  Var<T> operator()(const Var<T>& x, bool training) const {
    return batch_norm(x, gamma, beta, running_mean.node()->value, running_var.node()->value,
                      training, momentum, eps);
  }
};

template <typename T>
struct BiLstmLayer {
  Var<T> w_ih[2], w_hh[2], b[2];  // [0] forward, [1] backward direction
  std::size_t hidden = 0;

  // Input weights Glorot-uniform, recurrent weights orthogonal per gate,
  // bias zero except the forget gate (one).
  static BiLstmLayer create(ParamStore<T>& store, const std::string& name, std::size_t input,
                            std::size_t hidden, std::uint64_t seed);
  Var<T> operator()(const Var<T>& x) const {
    return bilstm(x, w_ih[0], w_hh[0], b[0], w_ih[1], w_hh[1], b[1]);
  }
};

}  // namespace eegart::nn
