#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "eegart/data/labels.hpp"
#include "eegart/signal/dsp.hpp"
#include "eegart/signal/recording.hpp"

namespace eegart::detectors {

enum class SpectralVerdict { clean, artifact, not_applicable };
std::string_view to_string(SpectralVerdict v);

struct SpectralConfig {
  double multiplier = 2.0;
  double notch_hz = 50.0;
  double notch_q = 30.0;
  double bandpass_lo_hz = 0.5;
  double bandpass_hi_hz = 40.0;
  double low_band_lo_hz = 0.75, low_band_hi_hz = 4.5;
  double high_band_lo_hz = 20.0, high_band_hi_hz = 30.0;
  signal::PreprocessConfig preprocess;
};

struct SpectralEpoch {
  double low_power = 0.0;   // 0.75-4.5 Hz
  double high_power = 0.0;  // 20-30 Hz
  // max(low / baseline_low, high / baseline_high) / multiplier; > 1 means artifact.
  double score = 0.0;
  SpectralVerdict verdict = SpectralVerdict::not_applicable;
};

struct SpectralResult {
  double baseline_low = 0.0;
  double baseline_high = 0.0;
  double multiplier = 0.0;
  std::vector<SpectralEpoch> epochs;
};

// Band powers of already-filtered, epoch-aligned data (Welch, 4 s segments).
SpectralResult spectral_detect_epochs(std::span<const std::vector<double>> epochs, double rate_hz,
                                      std::span<const data::Stage> stages,
                                      const SpectralConfig& cfg = {});

// notch -> band-pass -> trim/resample -> 20 s epochs -> spectral_detect_epochs.
// Throws std::invalid_argument when no epoch is staged N1/N2/N3 or the stage
// count does not match the epoch count.
SpectralResult spectral_detect(const signal::Recording& rec, std::span<const data::Stage> stages,
                               const SpectralConfig& cfg = {});

struct StdConfig {
  double window_s = 4.0;
  double threshold_z = 1.3;
  double epsilon = 1e-12;
};

struct StdScores {
  std::size_t window_length = 0;   // samples
  std::vector<double> window_std;  // population std per window
  std::vector<double> window_z;    // z-score of log(std + eps) over all windows
  std::vector<double> epoch_max_z; // complete epochs only
};

// Throws std::invalid_argument when the recording is shorter than one window.
StdScores std_scores(std::span<const double> samples, double rate_hz, const StdConfig& cfg = {});

struct StdFlags {
  std::vector<bool> window_flags;
  std::vector<bool> epoch_flags;  // OR over the epoch's windows
};
StdFlags std_flags(const StdScores& scores, double threshold_z);

struct StdResult {
  StdScores scores;
  StdFlags flags;
};
// On the recording as prepared for the models (trimmed, 128 Hz).
StdResult std_detect(const signal::Recording& rec, const StdConfig& cfg = {},
                     const signal::PreprocessConfig& pre = {});

struct StdSweepPoint {
  double threshold, se, sp;
};
struct StdSweep {
  std::vector<StdSweepPoint> points;
  StdSweepPoint best{};  // max sqrt(se * sp), lowest threshold on ties
};
// Epoch-level sweep over thresholds 0.05, 0.06, ..., 3.00 applied to the
// per-epoch maximum window z. Throws when labels hold a single class.
StdSweep sweep_std_threshold(std::span<const double> epoch_max_z, std::span<const int> labels);

}  // namespace eegart::detectors
