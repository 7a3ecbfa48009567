#include "eegart/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace eegart::nn {

void Samples::add(std::span<const float> x, int label) {
  if (length == 0) length = x.size();
  if (x.size() != length) throw std::invalid_argument("Samples: inconsistent example length");
  values.insert(values.end(), x.begin(), x.end());
  labels.push_back(label);
}

void Samples::add(std::span<const double> x, int label) {
  std::vector<float> f(x.begin(), x.end());
  add(std::span<const float>(f), label);
}

template <typename T>
Tensor<T> Samples::batch(std::span<const std::size_t> rows) const {
  Tensor<T> t({rows.size(), 1, length});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = row(rows[i]);
    std::copy(r.begin(), r.end(), t.ptr() + i * length);
  }
  return t;
}

template Tensor<float> Samples::batch<float>(std::span<const std::size_t>) const;
template Tensor<double> Samples::batch<double>(std::span<const std::size_t>) const;

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("train: batch_size must be >= 1");
  if (max_epochs == 0) throw std::invalid_argument("train: max_epochs must be >= 1");
  if (patience == 0 || patience > max_epochs) {
    throw std::invalid_argument("train: patience must be in [1, max_epochs]");
  }
  if (!(adam.lr > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
}

TrainHistory run_early_stopping(std::size_t max_epochs, std::size_t patience,
                                const std::function<EpochLosses(std::size_t)>& run_epoch,
                                const std::function<void(std::size_t)>& on_improved) {
  TrainHistory h;
  h.best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
    const EpochLosses l = run_epoch(epoch);
    EpochRecord rec{epoch, l.train_loss, l.val_loss, false};
    if (l.val_loss < h.best_val_loss) {
      h.best_val_loss = l.val_loss;
      h.best_epoch = epoch;
      rec.improved = true;
      since_best = 0;
      if (on_improved) on_improved(epoch);
    } else {
      ++since_best;
    }
    h.epochs.push_back(rec);
    if (since_best >= patience) {
      h.stopped_early = epoch < max_epochs;
      break;
    }
  }
  return h;
}

template <typename T>
double evaluate_loss(const Classifier<T>& model, const Samples& set, std::size_t batch_size) {
  if (set.empty()) throw std::invalid_argument("evaluate_loss: empty set");
  NoGradGuard no_grad;
  ForwardContext<T> ctx;
  double total = 0.0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < set.size(); start += batch_size) {
    const std::size_t end = std::min(set.size(), start + batch_size);
    rows.resize(end - start);
    std::iota(rows.begin(), rows.end(), start);
    const Var<T> logits = model.forward(set.batch<T>(rows), ctx);
    const std::span<const int> labels(set.labels.data() + start, end - start);
    total += static_cast<double>(softmax_cross_entropy(logits, labels).value()[0]) *
             static_cast<double>(end - start);
  }
  return total / static_cast<double>(set.size());
}

template <typename T>
std::vector<double> predict_positive(const Classifier<T>& model, const Samples& set,
                                     std::size_t batch_size) {
  NoGradGuard no_grad;
  ForwardContext<T> ctx;
  std::vector<double> out;
  out.reserve(set.size());
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < set.size(); start += batch_size) {
    const std::size_t end = std::min(set.size(), start + batch_size);
    rows.resize(end - start);
    std::iota(rows.begin(), rows.end(), start);
    const Var<T> probs = softmax(model.forward(set.batch<T>(rows), ctx));
    for (std::size_t i = 0; i < rows.size(); ++i) out.push_back(probs.value().at(i, 1));
  }
  return out;
}

template <typename T>
TrainResult<T> train(Classifier<T>& model, const Samples& train_set, const Samples& val_set,
                     const TrainConfig& cfg, std::vector<Var<T>> trainable) {
  cfg.validate();
  if (train_set.empty() || val_set.empty()) {
    throw std::invalid_argument("train: training and validation sets must be non-empty");
  }
  ParamStore<T>& store = model.store();
  if (trainable.empty()) trainable = store.parameters();

  // Freeze everything outside `trainable` for the duration of the run.
  std::vector<Var<T>> frozen;
  for (const auto& e : store.entries()) {
    if (!e.trainable) continue;
    const bool active = std::any_of(trainable.begin(), trainable.end(),
                                    [&](const Var<T>& v) { return v.node() == e.var.node(); });
    if (!active) frozen.push_back(e.var);
  }
  for (auto& v : frozen) v.set_requires_grad(false);

  std::vector<std::string> names;
  for (const auto& v : trainable)
    for (const auto& e : store.entries())
      if (e.var.node() == v.node()) names.push_back(e.name);

  Adam<T> adam(trainable, cfg.adam, names);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> batch_labels;
  TrainResult<T> result;

  auto run_epoch = [&](std::size_t epoch) -> EpochLosses {
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      batch_labels.clear();
      for (auto r : rows) batch_labels.push_back(train_set.labels[r]);
      ForwardContext<T> ctx;
      ctx.training = true;
      ctx.rng = &rng;
      const Var<T> logits = model.forward(train_set.batch<T>(rows), ctx);
      const Var<T> loss = softmax_cross_entropy(logits, std::span<const int>(batch_labels));
      adam.zero_grad();
      backward(loss);
      adam.step();
      total += static_cast<double>(loss.value()[0]) * static_cast<double>(rows.size());
    }
    const EpochLosses l{total / static_cast<double>(order.size()),
                        evaluate_loss(model, val_set, cfg.batch_size)};
    if (cfg.verbose) {
      std::fprintf(stderr, "epoch %3zu  train %.5f  val %.5f\n", epoch, l.train_loss, l.val_loss);
    }
    return l;
  };

  try {
    result.history = run_early_stopping(cfg.max_epochs, cfg.patience, run_epoch,
                                        [&](std::size_t) { result.best_state = store.snapshot(); });
  } catch (...) {
    for (auto& v : frozen) v.set_requires_grad(true);
    throw;
  }
  for (auto& v : frozen) v.set_requires_grad(true);
  if (!result.best_state.empty()) store.restore(result.best_state);
  return result;
}

template <typename T>
DualTrainResult<T> train_dual_optimizer(Classifier<T>& model, const Samples& train_set,
                                        const Samples& val_set, const TrainConfig& cfg,
                                        std::vector<Var<T>> feature_params,
                                        std::vector<Var<T>> head_params) {
  if (feature_params.empty() || head_params.empty()) {
    throw std::invalid_argument(
        "train_dual_optimizer: model must be partitioned into convolutional and dense parts");
  }
  DualTrainResult<T> r;
  r.features = train(model, train_set, val_set, cfg, std::move(feature_params));
  TrainConfig second = cfg;
  second.seed = derive_seed(cfg.seed, 2);
  r.head = train(model, train_set, val_set, second, std::move(head_params));
  return r;
}

template TrainResult<float> train<float>(Classifier<float>&, const Samples&, const Samples&,
                                         const TrainConfig&, std::vector<Var<float>>);
template TrainResult<double> train<double>(Classifier<double>&, const Samples&, const Samples&,
                                           const TrainConfig&, std::vector<Var<double>>);
template double evaluate_loss<float>(const Classifier<float>&, const Samples&, std::size_t);
template double evaluate_loss<double>(const Classifier<double>&, const Samples&, std::size_t);
template std::vector<double> predict_positive<float>(const Classifier<float>&, const Samples&,
                                                     std::size_t);
template std::vector<double> predict_positive<double>(const Classifier<double>&, const Samples&,
                                                      std::size_t);
template DualTrainResult<float> train_dual_optimizer<float>(Classifier<float>&, const Samples&,
                                                            const Samples&, const TrainConfig&,
                                                            std::vector<Var<float>>,
                                                            std::vector<Var<float>>);
template DualTrainResult<double> train_dual_optimizer<double>(Classifier<double>&, const Samples&,
                                                              const Samples&, const TrainConfig&,
                                                              std::vector<Var<double>>,
                                                              std::vector<Var<double>>);

}  // namespace eegart::nn
