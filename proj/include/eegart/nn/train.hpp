#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "eegart/nn/layers.hpp"
#include "eegart/nn/optim.hpp"

namespace eegart::nn {

// Fixed-length single-channel examples with integer class labels,
// stored as 32-bit floats.
struct Samples {
  std::size_t length = 0;
  std::vector<float> values;  // size() * length
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  void add(std::span<const float> x, int label);
  void add(std::span<const double> x, int label);
  std::span<const float> row(std::size_t i) const { return {values.data() + i * length, length}; }

  // [count,1,length] tensor of the given rows.
  template <typename T>
  Tensor<T> batch(std::span<const std::size_t> rows) const;
};

struct TrainConfig {
  std::size_t batch_size = 128;
  std::size_t max_epochs = 100;
  std::size_t patience = 20;
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool verbose = false;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool improved = false;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

struct EpochLosses {
  double train_loss;
  double val_loss;
};

// Runs epochs 1..max_epochs and stops once the validation loss has not
// improved (strictly decreased) for `patience` consecutive epochs.
// `on_improved` fires after every epoch that sets a new best.
TrainHistory run_early_stopping(std::size_t max_epochs, std::size_t patience,
                                const std::function<EpochLosses(std::size_t)>& run_epoch,
                                const std::function<void(std::size_t)>& on_improved);

// Something that maps [B,1,L] inputs to [B,K] logits.
template <typename T>
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ParamStore<T>& store() = 0;
  virtual Var<T> forward(const Tensor<T>& x, ForwardContext<T>& ctx) const = 0;
};

template <typename T>
struct TrainResult {
  TrainHistory history;
  std::vector<Tensor<T>> best_state;  // ParamStore snapshot at the best epoch
};

// Mini-batch cross-entropy training with Adam and validation-loss early
// stopping. Only `trainable` parameters are updated (all trainable ones when
// empty); the model is left holding the best-epoch weights.
template <typename T>
TrainResult<T> train(Classifier<T>& model, const Samples& train_set, const Samples& val_set,
                     const TrainConfig& cfg, std::vector<Var<T>> trainable = {});

// Mean cross-entropy in evaluation mode.
template <typename T>
double evaluate_loss(const Classifier<T>& model, const Samples& set, std::size_t batch_size);

// Softmax probability of class 1 per example, evaluation mode.
template <typename T>
std::vector<double> predict_positive(const Classifier<T>& model, const Samples& set,
                                     std::size_t batch_size);

template <typename T>
struct DualTrainResult {
  TrainResult<T> features;  // phase 1: convolutional part, head frozen
  TrainResult<T> head;      // phase 2: dense head, convolutional part frozen
};

// Two-phase scheme with an independent Adam state per phase.
template <typename T>
DualTrainResult<T> train_dual_optimizer(Classifier<T>& model, const Samples& train_set,
                                        const Samples& val_set, const TrainConfig& cfg,
                                        std::vector<Var<T>> feature_params,
                                        std::vector<Var<T>> head_params);

}  // namespace eegart::nn
