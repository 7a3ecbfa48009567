#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "eegart/nn/autograd.hpp"
#include "eegart/util/rng.hpp"

namespace eegart::nn {

enum class PadMode { zeros, circular };

struct Conv1dOptions {
  std::size_t stride = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
  PadMode pad_mode = PadMode::zeros;
};

// Output length of a 1-D convolution, or throws when the kernel does not fit.
std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, const Conv1dOptions& opt);

// x [B,C,L], w [K,C,S], b [K] (may be undefined) -> [B,K,L'].
// Cross-correlation, L' = floor((L + pad_left + pad_right - S) / stride) + 1.
template <typename T>
Var<T> conv1d(const Var<T>& x, const Var<T>& w, const Var<T>& b, const Conv1dOptions& opt);

// x [N,F], w [O,F], b [O] (may be undefined) -> [N,O].
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b);

// Per-channel normalization of x [B,C] or [B,C,L] over batch and length.
// In training mode the batch statistics are used and the running buffers
// are updated as running = momentum * running + (1 - momentum) * batch.
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                  double momentum, double eps);

template <typename T>
Var<T> relu(const Var<T>& x);
template <typename T>
Var<T> sigmoid(const Var<T>& x);
template <typename T>
Var<T> tanh(const Var<T>& x);

// Non-overlapping max pooling along the last axis of [B,C,L]; trailing
// samples that do not fill a pool are dropped. Ties go to the first index.
template <typename T>
Var<T> max_pool1d(const Var<T>& x, std::size_t size);

// Inverted dropout. Identity (same Var) outside training.
template <typename T>
Var<T> dropout(const Var<T>& x, double rate, bool training, Rng* rng);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

// Elementwise product; every dimension of b equals a's or is 1.
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> scale(const Var<T>& x, double factor);

// Reductions over one axis, keeping it with extent 1.
template <typename T>
Var<T> mean_axis(const Var<T>& x, std::size_t axis);
template <typename T>
Var<T> max_axis(const Var<T>& x, std::size_t axis);

template <typename T>
Var<T> concat(const std::vector<Var<T>>& xs, std::size_t axis);

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape);

// [A,B,C] -> [A,C,B]
template <typename T>
Var<T> transpose12(const Var<T>& x);

// Row-wise softmax of [N,K].
template <typename T>
Var<T> softmax(const Var<T>& x);

// Mean cross-entropy of logits [N,K] against integer class labels.
template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> labels);

template <typename T>
Var<T> sum(const Var<T>& x);

// sum(x * weights) for a constant weight tensor of x's shape.
template <typename T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& weights);

// Bidirectional LSTM over x [B,T,D]. Per direction: w_ih [4H,D], w_hh [4H,H],
// bias [4H], gate order (input, forget, cell, output). Output [B,T,2H] with
// the forward direction in the first H features.
template <typename T>
Var<T> bilstm(const Var<T>& x, const Var<T>& w_ih_fwd, const Var<T>& w_hh_fwd,
              const Var<T>& b_fwd, const Var<T>& w_ih_bwd, const Var<T>& w_hh_bwd,
              const Var<T>& b_bwd);

}  // namespace eegart::nn
