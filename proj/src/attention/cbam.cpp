#include "eegart/attention/cbam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eegart::attention {

template <typename T>
std::size_t ChannelAttention<T>::hidden_width(std::size_t channels, std::size_t ratio) {
  if (ratio == 0) throw std::invalid_argument("cbam: reduction ratio must be positive");
  return std::max<std::size_t>(1, channels / ratio);
}

template <typename T>
ChannelAttention<T> ChannelAttention<T>::create(nn::ParamStore<T>& store, const std::string& name,
                                                std::size_t channels, std::size_t ratio,
                                                std::uint64_t seed) {
  const std::size_t hidden = hidden_width(channels, ratio);
  ChannelAttention ca;
  ca.fc1 = nn::DenseLayer<T>::create(store, name + ".mlp1", channels, hidden, seed);
  ca.fc2 = nn::DenseLayer<T>::create(store, name + ".mlp2", hidden, channels, seed);
  return ca;
}

template <typename T>
Var<T> ChannelAttention<T>::operator()(const Var<T>& f) const {
  const std::size_t B = f.dim(0), C = f.dim(1);
  const auto mlp = [&](const Var<T>& d) { return fc2(nn::relu(fc1(d))); };
  const Var<T> avg = nn::reshape(nn::mean_axis(f, 2), {B, C});
  const Var<T> mx = nn::reshape(nn::max_axis(f, 2), {B, C});
  return nn::reshape(nn::sigmoid(nn::add(mlp(avg), mlp(mx))), {B, C, 1});
}

template <typename T>
SpatialAttention<T> SpatialAttention<T>::create(nn::ParamStore<T>& store, const std::string& name,
                                                std::uint64_t seed) {
  SpatialAttention sa;
  sa.conv = nn::Conv1dLayer<T>::create(store, name + ".conv", 2, 1, kKernel,
                                       {1, kKernel / 2, kKernel / 2, nn::PadMode::zeros}, seed);
  return sa;
}

template <typename T>
Var<T> SpatialAttention<T>::operator()(const Var<T>& f) const {
  const Var<T> pooled = nn::concat<T>({nn::mean_axis(f, 1), nn::max_axis(f, 1)}, 1);
  return nn::sigmoid(conv(pooled));
}

template <typename T>
Cbam<T> Cbam<T>::create(nn::ParamStore<T>& store, const std::string& name, std::size_t channels,
                        std::size_t ratio, std::uint64_t seed) {
  Cbam c;
  c.channel = ChannelAttention<T>::create(store, name + ".channel", channels, ratio, seed);
  c.spatial = SpatialAttention<T>::create(store, name + ".spatial", seed);
  return c;
}

template <typename T>
Var<T> Cbam<T>::operator()(const Var<T>& f) const {
  const Var<T> refined = nn::mul(f, channel(f));
  return nn::mul(refined, spatial(refined));
}

template struct ChannelAttention<float>;
template struct ChannelAttention<double>;
template struct SpatialAttention<float>;
template struct SpatialAttention<double>;
template struct Cbam<float>;
template struct Cbam<double>;

std::size_t edge_exclusion_steps(std::size_t length, double time_scale_s, double edge_s) {
  if (!(time_scale_s > 0.0)) throw std::invalid_argument("attention map: time scale must be positive");
  if (!(edge_s >= 0.0)) throw std::invalid_argument("attention map: edge exclusion must be non-negative");
  // Tolerance so that e.g. 0.5 / 0.25 does not round up to 3.
  const auto steps = static_cast<std::size_t>(std::ceil(edge_s / time_scale_s - 1e-9));
  return 2 * steps < length ? steps : 0;
}

AttentionMap activation_attention_map(const nn::Tensor<double>& a, double time_scale_s,
                                      double edge_exclusion_s, int p) {
  if (a.rank() != 2 || a.dim(1) == 0) throw std::invalid_argument("attention map: expected [C, L] activations");
  if (p < 1) throw std::invalid_argument("attention map: power must be >= 1");
  const std::size_t C = a.dim(0), L = a.dim(1);
  AttentionMap m;
  m.time_scale_s_per_step = time_scale_s;
  m.edge_exclusion_s = edge_exclusion_s;
  m.edge_steps = edge_exclusion_steps(L, time_scale_s, edge_exclusion_s);
  m.raw.assign(L, 0.0);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t l = 0; l < L; ++l) {
      const double v = std::abs(a.at(c, l));
      double pw = 1.0;
      for (int k = 0; k < p; ++k) pw *= v;
      m.raw[l] += pw;
    }
  m.values.assign(L, 0.0);
  const std::size_t lo_i = m.edge_steps, hi_i = L - m.edge_steps;
  const auto [mn, mx] = std::minmax_element(m.raw.begin() + static_cast<std::ptrdiff_t>(lo_i),
                                            m.raw.begin() + static_cast<std::ptrdiff_t>(hi_i));
  const double lo = *mn, range = *mx - *mn;
  if (!(range > 0.0) || !std::isfinite(range)) {
    m.degenerate = true;
    return m;
  }
  for (std::size_t l = lo_i; l < hi_i; ++l) m.values[l] = (m.raw[l] - lo) / range;
  return m;
}

nlohmann::ordered_json to_json(const AttentionMap& m) {
  nlohmann::ordered_json j;
  j["epoch_index"] = m.epoch_index;
  j["time_scale_s_per_step"] = m.time_scale_s_per_step;
  j["edge_exclusion_s"] = m.edge_exclusion_s;
  j["edge_steps"] = m.edge_steps;
  j["degenerate"] = m.degenerate;
  j["values"] = m.values;
  return j;
}

AttentionMap attention_map_from_json(const nlohmann::json& j) {
  AttentionMap m;
  m.epoch_index = j.at("epoch_index").get<std::size_t>();
  m.time_scale_s_per_step = j.at("time_scale_s_per_step").get<double>();
  m.edge_exclusion_s = j.value("edge_exclusion_s", 0.7);
  m.values = j.at("values").get<std::vector<double>>();
  m.edge_steps = j.value("edge_steps", edge_exclusion_steps(m.values.size(), m.time_scale_s_per_step,
                                                            m.edge_exclusion_s));
  m.degenerate = j.value("degenerate", false);
  return m;
}

}  // namespace eegart::attention
