#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eegart/signal/dsp.hpp"

namespace eegart::signal {

void Recording::validate() const {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) {
    throw std::invalid_argument("recording " + id + ": rate_hz must be positive");
  }
  if (samples.empty()) throw std::invalid_argument("recording " + id + ": no samples");
}

std::string_view to_string(Label l) {
  switch (l) {
    case Label::clean: return "clean";
    case Label::artifact: return "artifact";
    case Label::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

Label label_from_string(std::string_view s) {
  if (s == "clean") return Label::clean;
  if (s == "artifact") return Label::artifact;
  if (s == "unlabeled") return Label::unlabeled;
  throw std::invalid_argument("unknown label '" + std::string(s) + "'");
}

Recording trim_head(const Recording& rec, double seconds) {
  rec.validate();
  if (!(seconds >= 0.0)) throw std::invalid_argument("trim_head: seconds must be non-negative");
  const auto drop = static_cast<std::size_t>(std::llround(seconds * rec.rate_hz));
  if (drop >= rec.samples.size()) {
    throw std::invalid_argument("trim_head: recording " + rec.id + " (" +
                                std::to_string(rec.duration_s()) + " s) is not longer than " +
                                std::to_string(seconds) + " s");
  }
  Recording out;
  out.id = rec.id;
  out.rate_hz = rec.rate_hz;
  out.start_offset_s = rec.start_offset_s + static_cast<double>(drop) / rec.rate_hz;
  out.samples.assign(rec.samples.begin() + static_cast<std::ptrdiff_t>(drop), rec.samples.end());
  return out;
}

ScaledValues epoch_minmax_scale(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("epoch_minmax_scale: empty epoch");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  ScaledValues out;
  if (!(hi > lo)) {
    out.values.assign(values.size(), 0.5);
    out.degenerate = true;
    return out;
  }
  const double range = hi - lo;
  out.values.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = (values[i] - lo) / range;
  return out;
}

std::vector<Epoch> segment_epochs(const Recording& rec, double epoch_s) {
  rec.validate();
  const double len_d = epoch_s * rec.rate_hz;
  const auto len = static_cast<std::size_t>(std::llround(len_d));
  if (len == 0 || std::abs(len_d - static_cast<double>(len)) > 1e-9) {
    throw std::invalid_argument("segment_epochs: epoch length must be a whole number of samples");
  }
  std::vector<Epoch> out;
  const std::size_t n = rec.samples.size() / len;
  out.reserve(n);
  for (std::size_t e = 0; e < n; ++e) {
    Epoch ep;
    ep.epoch_index = e;
    ep.start_s = rec.start_offset_s + static_cast<double>(e) * epoch_s;
    auto scaled = epoch_minmax_scale(std::span<const double>(rec.samples.data() + e * len, len));
    ep.values = std::move(scaled.values);
    ep.degenerate = scaled.degenerate;
    out.push_back(std::move(ep));
  }
  return out;
}

Recording prepare_recording(const Recording& rec, const PreprocessConfig& cfg) {
  return resample(trim_head(rec, cfg.trim_s), cfg.target_hz);
}

std::vector<Epoch> preprocess(const Recording& rec, const PreprocessConfig& cfg) {
  return segment_epochs(prepare_recording(rec, cfg), cfg.epoch_s);
}

}  // namespace eegart::signal
