#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eegart/nn/layers.hpp"
#include "json.hpp"

namespace eegart::attention {

using nn::Var;

// M_c(F) = sigmoid(MLP(avgpool_L F) + MLP(maxpool_L F)), shape [B, C, 1].
// The two-layer bottleneck MLP (ReLU between) is shared by both paths.
template <typename T>
struct ChannelAttention {
  nn::DenseLayer<T> fc1, fc2;

  static std::size_t hidden_width(std::size_t channels, std::size_t ratio);
  static ChannelAttention create(nn::ParamStore<T>& store, const std::string& name,
                                 std::size_t channels, std::size_t ratio, std::uint64_t seed);
  Var<T> operator()(const Var<T>& f) const;
};

// M_s(F') = sigmoid(conv7([avgpool_C F'; maxpool_C F'])), shape [B, 1, L].
template <typename T>
struct SpatialAttention {
  nn::Conv1dLayer<T> conv;  // 2 -> 1 channels, kernel 7, padding 3 on both sides

  static constexpr std::size_t kKernel = 7;
  static SpatialAttention create(nn::ParamStore<T>& store, const std::string& name,
                                 std::uint64_t seed);
  Var<T> operator()(const Var<T>& f) const;
};

template <typename T>
struct Cbam {
  ChannelAttention<T> channel;
  SpatialAttention<T> spatial;

  static Cbam create(nn::ParamStore<T>& store, const std::string& name, std::size_t channels,
                     std::size_t ratio, std::uint64_t seed);
  // (F * M_c(F)) * M_s(F * M_c(F)), both products broadcast.
  Var<T> operator()(const Var<T>& f) const;
};

struct AttentionMap {
  std::size_t epoch_index = 0;
  double time_scale_s_per_step = 0.0;
  double edge_exclusion_s = 0.7;
  std::size_t edge_steps = 0;  // steps zeroed at each end
  std::vector<double> raw;     // sum_c |A|^p before normalization
  std::vector<double> values;  // [0, 1]
  bool degenerate = false;     // flat over the scored region

  std::size_t size() const { return values.size(); }
};

// Steps excluded at each end: ceil(edge_s / time_scale), or 0 when that
// would leave no interior step.
std::size_t edge_exclusion_steps(std::size_t length, double time_scale_s, double edge_s);

// m[l] = sum_c |A[c, l]|^p, min-max normalized over the interior; the edge
// steps are set to 0. A flat interior yields all zeros and `degenerate`.
AttentionMap activation_attention_map(const nn::Tensor<double>& a, double time_scale_s,
                                      double edge_exclusion_s = 0.7, int p = 4);

nlohmann::ordered_json to_json(const AttentionMap& m);
AttentionMap attention_map_from_json(const nlohmann::json& j);

}  // namespace eegart::attention
