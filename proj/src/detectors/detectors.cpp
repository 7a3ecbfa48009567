#include "eegart/detectors/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eegart::detectors {

std::string_view to_string(SpectralVerdict v) {
  switch (v) {
    case SpectralVerdict::clean: return "clean";
    case SpectralVerdict::artifact: return "artifact";
    case SpectralVerdict::not_applicable: return "not_applicable";
  }
  return "?";
}

SpectralResult spectral_detect_epochs(std::span<const std::vector<double>> epochs, double rate_hz,
                                      std::span<const data::Stage> stages,
                                      const SpectralConfig& cfg) {
  if (epochs.size() != stages.size()) {
    throw std::invalid_argument("spectral_detect: " + std::to_string(stages.size()) +
                                " stages for " + std::to_string(epochs.size()) + " epochs");
  }
  if (!(cfg.multiplier > 0.0)) throw std::invalid_argument("spectral_detect: multiplier must be positive");
  const auto seg = static_cast<std::size_t>(std::lround(signal::kWindowSeconds * rate_hz));
  SpectralResult r;
  r.multiplier = cfg.multiplier;
  r.epochs.resize(epochs.size());
  std::size_t nrem = 0;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto ps = signal::welch_psd(epochs[i], rate_hz, seg, 0.5);
    r.epochs[i].low_power = signal::band_power(ps, cfg.low_band_lo_hz, cfg.low_band_hi_hz);
    r.epochs[i].high_power = signal::band_power(ps, cfg.high_band_lo_hz, cfg.high_band_hi_hz);
    if (data::is_nrem(stages[i])) {
      r.baseline_low += r.epochs[i].low_power;
      r.baseline_high += r.epochs[i].high_power;
      ++nrem;
    }
  }
  if (nrem == 0) throw std::invalid_argument("spectral_detect: no N1/N2/N3 epochs, baseline undefined");
  r.baseline_low /= static_cast<double>(nrem);
  r.baseline_high /= static_cast<double>(nrem);
  if (!(r.baseline_low > 0.0) || !(r.baseline_high > 0.0)) {
    throw std::invalid_argument("spectral_detect: zero baseline band power");
  }
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    auto& e = r.epochs[i];
    e.score = std::max(e.low_power / r.baseline_low, e.high_power / r.baseline_high) / cfg.multiplier;
    if (!data::is_nrem(stages[i])) {
      e.verdict = SpectralVerdict::not_applicable;
    } else {
      const bool hit = e.low_power > cfg.multiplier * r.baseline_low ||
                       e.high_power > cfg.multiplier * r.baseline_high;
      e.verdict = hit ? SpectralVerdict::artifact : SpectralVerdict::clean;
    }
  }
  return r;
}

SpectralResult spectral_detect(const signal::Recording& rec, std::span<const data::Stage> stages,
                               const SpectralConfig& cfg) {
  rec.validate();
  signal::Recording filtered = rec;
  if (cfg.notch_hz < rec.rate_hz / 2) filtered = signal::notch_filter(filtered, cfg.notch_hz, cfg.notch_q);
  filtered = signal::butterworth_bandpass(filtered, cfg.bandpass_lo_hz,
                                          std::min(cfg.bandpass_hi_hz, 0.45 * rec.rate_hz));
  const signal::Recording prepared = signal::prepare_recording(filtered, cfg.preprocess);
  const auto len = static_cast<std::size_t>(std::lround(cfg.preprocess.epoch_s * prepared.rate_hz));
  std::vector<std::vector<double>> epochs;
  for (std::size_t start = 0; start + len <= prepared.samples.size(); start += len) {
    epochs.emplace_back(prepared.samples.begin() + static_cast<std::ptrdiff_t>(start),
                        prepared.samples.begin() + static_cast<std::ptrdiff_t>(start + len));
  }
  return spectral_detect_epochs(epochs, prepared.rate_hz, stages, cfg);
}

StdScores std_scores(std::span<const double> samples, double rate_hz, const StdConfig& cfg) {
  if (!(rate_hz > 0.0) || !(cfg.window_s > 0.0)) throw std::invalid_argument("std_detect: bad rate or window");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("std_detect: epsilon must be positive");
  StdScores s;
  s.window_length = static_cast<std::size_t>(std::lround(cfg.window_s * rate_hz));
  if (s.window_length == 0 || samples.size() < s.window_length) {
    throw std::invalid_argument("std_detect: recording shorter than one window");
  }
  const std::size_t n_win = samples.size() / s.window_length;
  std::vector<double> logs(n_win);
  s.window_std.resize(n_win);
  for (std::size_t w = 0; w < n_win; ++w) {
    const auto win = samples.subspan(w * s.window_length, s.window_length);
    double mean = 0.0;
    for (double v : win) mean += v;
    mean /= static_cast<double>(win.size());
    double var = 0.0;
    for (double v : win) var += (v - mean) * (v - mean);
    s.window_std[w] = std::sqrt(var / static_cast<double>(win.size()));
    logs[w] = std::log(s.window_std[w] + cfg.epsilon);
  }
  double mu = 0.0;
  for (double v : logs) mu += v;
  mu /= static_cast<double>(n_win);
  double var = 0.0;
  for (double v : logs) var += (v - mu) * (v - mu);
  const double sd = std::sqrt(var / static_cast<double>(n_win));
  s.window_z.resize(n_win, 0.0);
  // Relative floor: identical windows can leave rounding-level spread.
  if (sd > 1e-12 * std::max(1.0, std::abs(mu))) {
    for (std::size_t w = 0; w < n_win; ++w) s.window_z[w] = (logs[w] - mu) / sd;
  }
  const std::size_t n_ep = n_win / signal::kWindowsPerEpoch;
  s.epoch_max_z.resize(n_ep);
  for (std::size_t e = 0; e < n_ep; ++e) {
    const auto first = s.window_z.begin() + static_cast<std::ptrdiff_t>(e * signal::kWindowsPerEpoch);
    s.epoch_max_z[e] = *std::max_element(first, first + signal::kWindowsPerEpoch);
  }
  return s;
}

StdFlags std_flags(const StdScores& scores, double threshold_z) {
  StdFlags f;
  f.window_flags.resize(scores.window_z.size());
  for (std::size_t w = 0; w < scores.window_z.size(); ++w) f.window_flags[w] = scores.window_z[w] > threshold_z;
  f.epoch_flags.assign(scores.epoch_max_z.size(), false);
  for (std::size_t e = 0; e < f.epoch_flags.size(); ++e)
    for (std::size_t k = 0; k < signal::kWindowsPerEpoch; ++k)
      if (f.window_flags[e * signal::kWindowsPerEpoch + k]) f.epoch_flags[e] = true;
  return f;
}

StdResult std_detect(const signal::Recording& rec, const StdConfig& cfg,
                     const signal::PreprocessConfig& pre) {
  rec.validate();
  const signal::Recording prepared = signal::prepare_recording(rec, pre);
  StdResult r;
  r.scores = std_scores(prepared.samples, prepared.rate_hz, cfg);
  r.flags = std_flags(r.scores, cfg.threshold_z);
  return r;
}

StdSweep sweep_std_threshold(std::span<const double> epoch_max_z, std::span<const int> labels) {
  if (epoch_max_z.size() != labels.size()) throw std::invalid_argument("sweep_std_threshold: size mismatch");
  std::size_t pos = 0;
  for (int l : labels) pos += l != 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("sweep_std_threshold: labels hold a single class");
  StdSweep s;
  double best_g = -1.0;
  for (int i = 5; i <= 300; ++i) {
    const double t = i / 100.0;
    std::size_t tp = 0, tn = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const bool flagged = epoch_max_z[k] > t;
      if (labels[k] != 0 && flagged) ++tp;
      if (labels[k] == 0 && !flagged) ++tn;
    }
    const StdSweepPoint p{t, static_cast<double>(tp) / static_cast<double>(pos),
                          static_cast<double>(tn) / static_cast<double>(neg)};
    s.points.push_back(p);
    const double g = std::sqrt(p.se * p.sp);
    if (g > best_g) {
      best_g = g;
      s.best = p;
    }
  }
  return s;
}

}  // namespace eegart::detectors
