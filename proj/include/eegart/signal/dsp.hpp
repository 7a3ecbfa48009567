#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "eegart/signal/recording.hpp"

namespace eegart::signal {

// ---- resampling ----

// Smallest up/down pair with up/down == to_hz/from_hz. Integer rates are
// reduced exactly by their gcd; other rates use a continued-fraction
// approximation with denominators up to 10000.
std::pair<std::size_t, std::size_t> rational_ratio(double from_hz, double to_hz);

// Polyphase FIR resampling by up/down with a Kaiser-windowed sinc
// (beta 5, 10 zero crossings per side at the lower of the two Nyquist
// rates), zero-padded boundaries. Output length ceil(n * up / down).
std::vector<double> resample_poly(std::span<const double> x, std::size_t up, std::size_t down);

Recording resample(const Recording& rec, double target_hz);

// ---- IIR filtering ----

// Second-order sections, each {b0, b1, b2, a0, a1, a2} with a0 == 1.
using Section = std::array<double, 6>;
using Sos = std::vector<Section>;

// Digital Butterworth band-pass of the given prototype order (2*order poles),
// designed through the bilinear transform with pre-warped edges.
Sos butterworth_bandpass_sos(double lo_hz, double hi_hz, double rate_hz, int order);
// Second-order IIR notch at f0 with quality factor q (-3 dB width f0/q).
Sos notch_sos(double f0_hz, double q, double rate_hz);

// Complex frequency response magnitude at f_hz.
double sos_gain(const Sos& sos, double f_hz, double rate_hz);

// Causal direct-form-II-transposed filtering.
std::vector<double> sosfilt(const Sos& sos, std::span<const double> x);
// Forward-backward (zero phase) filtering with odd extension of `padlen`
// samples at both ends (clamped to n - 1) and steady-state initial
// conditions scaled by the edge values.
std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x, std::size_t padlen);
// Default padding: 3 * (2 * sections + 1) samples.
std::size_t default_padlen(const Sos& sos);

// Zero-phase band-pass. Odd-extension padding covers three periods of the
// lower edge so the slow high-pass transient settles outside the data.
Recording butterworth_bandpass(const Recording& rec, double lo_hz, double hi_hz, int order = 4);
Recording notch_filter(const Recording& rec, double f0_hz = 50.0, double q = 30.0);

// ---- spectra ----

struct PowerSpectrum {
  std::vector<double> freqs_hz;
  std::vector<double> psd;  // one-sided density, units^2 / Hz
  double resolution_hz = 0.0;
};

// Welch estimate: periodic Hann window, per-segment mean removal, averaged
// one-sided periodograms with density scaling. Trailing samples that do not
// fill a segment are ignored.
PowerSpectrum welch_psd(std::span<const double> values, double rate_hz, std::size_t seg_len = 512,
                        double overlap = 0.5);

// Trapezoidal integral of the PSD over [lo_hz, hi_hz], interpolating
// linearly at band edges that fall between bins.
double band_power(const PowerSpectrum& ps, double lo_hz, double hi_hz);

// ---- epoching ----

Recording trim_head(const Recording& rec, double seconds);

struct ScaledValues {
  std::vector<double> values;
  bool degenerate = false;  // input was constant; output is all 0.5
};
ScaledValues epoch_minmax_scale(std::span<const double> values);

// Consecutive non-overlapping epochs of epoch_s seconds, each min-max scaled.
// A trailing partial epoch is dropped. epoch_s * rate_hz must be an integer.
std::vector<Epoch> segment_epochs(const Recording& rec, double epoch_s = kEpochSeconds);

struct PreprocessConfig {
  double trim_s = 20.0;
  double target_hz = kModelRateHz;
  double epoch_s = kEpochSeconds;
};

// trim -> resample -> the recording the models and the std detector see.
Recording prepare_recording(const Recording& rec, const PreprocessConfig& cfg = {});
// prepare_recording followed by segment_epochs.
std::vector<Epoch> preprocess(const Recording& rec, const PreprocessConfig& cfg = {});

}  // namespace eegart::signal
