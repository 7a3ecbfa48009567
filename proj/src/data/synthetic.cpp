#include "eegart/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "eegart/signal/dsp.hpp"
#include "eegart/util/rng.hpp"

namespace eegart::data {

namespace {

constexpr double kEpochS = signal::kEpochSeconds;

std::vector<double> white(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

void normalize_rms(std::vector<double>& x, double target) {
  double s = 0.0;
  for (double v : x) s += v * v;
  const double r = std::sqrt(s / static_cast<double>(std::max<std::size_t>(1, x.size())));
  if (r > 0.0)
    for (auto& v : x) v *= target / r;
}

// Band-limited Gaussian noise at unit RMS.
std::vector<double> band_noise(std::size_t n, double lo, double hi, double fs, Rng& rng) {
  hi = std::min(hi, 0.45 * fs);
  const auto sos = signal::butterworth_bandpass_sos(lo, hi, fs, 2);
  // Run-in so the filter state has settled before the kept part.
  const auto pad = static_cast<std::size_t>(std::ceil(4.0 * fs / lo));
  auto y = signal::sosfilt(sos, white(n + pad, rng));
  std::vector<double> out(y.begin() + static_cast<std::ptrdiff_t>(pad), y.end());
  normalize_rms(out, 1.0);
  return out;
}

// 1/f noise by the Kellet three-pole approximation, unit RMS.
std::vector<double> pink(std::size_t n, Rng& rng) {
  const double b[4] = {0.049922035, -0.095993537, 0.050612699, -0.004408786};
  const double a[4] = {1.0, -2.494956002, 2.017265875, -0.522189400};
  const std::size_t pad = 4096;
  const auto w = white(n + pad, rng);
  std::vector<double> y(w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < 4 && k <= i; ++k) acc += b[k] * w[i - k];
    for (std::size_t k = 1; k < 4 && k <= i; ++k) acc -= a[k] * y[i - k];
    y[i] = acc;
  }
  std::vector<double> out(y.begin() + pad, y.end());
  // Remove the slow mean wander so the recording is zero-centred.
  double m = 0.0;
  for (double v : out) m += v;
  m /= static_cast<double>(out.size());
  for (auto& v : out) v -= m;
  normalize_rms(out, 1.0);
  return out;
}

double hann(double u) { return 0.5 - 0.5 * std::cos(2.0 * M_PI * u); }

// Tukey window value on u in [0, 1) with the given taper fraction.
double tukey(double u, double taper) {
  if (u < taper / 2) return 0.5 - 0.5 * std::cos(2.0 * M_PI * u / taper);
  if (u > 1 - taper / 2) return 0.5 - 0.5 * std::cos(2.0 * M_PI * (1 - u) / taper);
  return 1.0;
}

double stage_delta_rms(Stage s) {
  switch (s) {
    case Stage::W: return 4.0;
    case Stage::N1: return 8.0;
    case Stage::N2: return 15.0;
    case Stage::N3: return 35.0;
    case Stage::REM: return 6.0;
  }
  return 0.0;
}

std::vector<Stage> stage_chain(std::size_t n, Rng& rng) {
  static constexpr std::array<std::array<double, 5>, 5> P{{
      {0.90, 0.08, 0.02, 0.00, 0.00},
      {0.05, 0.80, 0.13, 0.00, 0.02},
      {0.02, 0.03, 0.88, 0.05, 0.02},
      {0.01, 0.00, 0.07, 0.92, 0.00},
      {0.03, 0.04, 0.03, 0.00, 0.90},
  }};
  std::vector<Stage> out(n);
  int s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<Stage>(s);
    const double u = rng.uniform();
    double acc = 0.0;
    int next = 4;
    for (int j = 0; j < 5; ++j) {
      acc += P[s][j];
      if (u < acc) {
        next = j;
        break;
      }
    }
    s = next;
  }
  return out;
}

}  // namespace

std::string_view to_string(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::spike: return "spike";
    case ArtifactKind::emg_burst: return "emg_burst";
    case ArtifactKind::motion_step: return "motion_step";
    case ArtifactKind::amplitude_surge: return "amplitude_surge";
  }
  return "spike";
}

ArtifactKind artifact_kind_from_string(std::string_view s) {
  if (s == "spike") return ArtifactKind::spike;
  if (s == "emg_burst") return ArtifactKind::emg_burst;
  if (s == "motion_step") return ArtifactKind::motion_step;
  if (s == "amplitude_surge") return ArtifactKind::amplitude_surge;
  throw std::invalid_argument("unknown artifact kind '" + std::string(s) + "'");
}

void SyntheticSpec::validate() const {
  if (!(artifact_rate >= 0.0) || artifact_rate >= 0.5) {
    throw std::invalid_argument("synthetic: artifact_rate must be in [0, 0.5)");
  }
  if (!(sweat_rate >= 0.0 && sweat_rate <= 1.0)) throw std::invalid_argument("synthetic: sweat_rate must be in [0, 1]");
  if (!(rate_hz >= 130.0)) throw std::invalid_argument("synthetic: rate_hz must be >= 130 to carry 20-60 Hz EMG");
  if (!(lead_in_s >= 0.0)) throw std::invalid_argument("synthetic: lead_in_s must be non-negative");
  if (!(duration_s >= lead_in_s + kEpochS)) {
    throw std::invalid_argument("synthetic: duration must cover the lead-in plus one epoch");
  }
  if (artifact_rate > 0.0 && artifact_kinds.empty()) throw std::invalid_argument("synthetic: no artifact kinds");
  if (background.pink_noise_gain < 0 || background.delta_osc_gain < 0 || background.spindle_gain < 0 ||
      !(subject_gain > 0.0)) {
    throw std::invalid_argument("synthetic: gains must be non-negative");
  }
}

std::size_t SyntheticSpec::epoch_count() const {
  return static_cast<std::size_t>(std::floor((duration_s - lead_in_s) / kEpochS + 1e-9));
}

SyntheticRecording generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const double fs = spec.rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * fs));
  const std::size_t n_epochs = spec.epoch_count();
  const auto at = [&](double t) { return static_cast<std::size_t>(std::llround(t * fs)); };

  SyntheticRecording out;
  Rng stage_rng(derive_seed(spec.seed, "stages"));
  out.stages = stage_chain(n_epochs, stage_rng);
  auto stage_at = [&](std::size_t i) {
    const double t = static_cast<double>(i) / fs - spec.lead_in_s;
    if (t < 0) return Stage::W;
    const auto e = static_cast<std::size_t>(t / kEpochS);
    return e < n_epochs ? out.stages[e] : out.stages.back();
  };

  // Background.
  Rng bg_rng(derive_seed(spec.seed, "background"));
  std::vector<double> x(n, 0.0);
  {
    const auto p = pink(n, bg_rng);
    const auto delta = band_noise(n, 0.75, 4.5, fs, bg_rng);
    const auto alpha = band_noise(n, 8.0, 12.0, fs, bg_rng);
    // Stage amplitude, cross-faded over one second around epoch boundaries.
    const auto fade = static_cast<double>(at(1.0));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i >= static_cast<std::size_t>(fade) ? i - static_cast<std::size_t>(fade) : 0;
      const double w = std::min(1.0, static_cast<double>(i % std::max<std::size_t>(1, at(kEpochS))) / fade);
      const double amp = w * stage_delta_rms(stage_at(i)) + (1 - w) * stage_delta_rms(stage_at(j));
      const double alpha_amp = stage_at(i) == Stage::W ? 6.0 : 1.0;
      x[i] = 12.0 * spec.background.pink_noise_gain * p[i] + spec.background.delta_osc_gain * amp * delta[i] +
             alpha_amp * alpha[i];
    }
    // Spindles in N2 (frequent) and N3 (occasional).
    for (std::size_t e = 0; e < n_epochs; ++e) {
      const double chance = out.stages[e] == Stage::N2 ? 0.6 : out.stages[e] == Stage::N3 ? 0.2 : 0.0;
      for (int k = 0; k < 2; ++k) {
        if (!bg_rng.bernoulli(chance)) continue;
        const double dur = bg_rng.uniform(0.5, 2.0), f = bg_rng.uniform(11.0, 15.0);
        const double amp = bg_rng.uniform(15.0, 25.0) * spec.background.spindle_gain;
        const double t0 = spec.lead_in_s + kEpochS * static_cast<double>(e) + bg_rng.uniform(0.0, kEpochS - dur);
        const double ph = bg_rng.uniform(0.0, 2 * M_PI);
        for (std::size_t i = at(t0); i < std::min(n, at(t0 + dur)); ++i) {
          const double u = (static_cast<double>(i) / fs - t0) / dur;
          x[i] += amp * hann(u) * std::sin(2 * M_PI * f * static_cast<double>(i) / fs + ph);
        }
      }
    }
    for (auto& v : x) v *= spec.subject_gain;
    const double ph = bg_rng.uniform(0.0, 2 * M_PI);
    for (std::size_t i = 0; i < n; ++i) x[i] += spec.mains_uv * std::sin(2 * M_PI * 50.0 * static_cast<double>(i) / fs + ph);
  }

  // Artifacts: one event in a Bernoulli(artifact_rate) subset of epochs,
  // strictly inside the epoch; sub-1 Hz drifts in some of the others.
  Rng art_rng(derive_seed(spec.seed, "artifacts"));
  const double margin = 0.05;
  for (std::size_t e = 0; e < n_epochs; ++e) {
    const double e0 = spec.lead_in_s + kEpochS * static_cast<double>(e);
    const bool has_artifact = art_rng.bernoulli(spec.artifact_rate);
    // Draw the sweat decision for every epoch so the two streams stay aligned.
    const bool has_sweat = art_rng.bernoulli(spec.sweat_rate);
    if (has_artifact) {
      const ArtifactKind kind = spec.artifact_kinds[art_rng.index(spec.artifact_kinds.size())];
      double dur = 0.0;
      switch (kind) {
        case ArtifactKind::spike: dur = art_rng.uniform(0.06, 0.2); break;
        case ArtifactKind::emg_burst: dur = art_rng.uniform(0.5, 3.0); break;
        case ArtifactKind::motion_step: dur = art_rng.uniform(1.0, 3.0); break;
        case ArtifactKind::amplitude_surge: dur = art_rng.uniform(1.0, 4.0); break;
      }
      const double t0 = e0 + margin + art_rng.uniform(0.0, kEpochS - dur - 2 * margin);
      const std::size_t i0 = at(t0), i1 = std::min(n, at(t0 + dur));
      // Snap the truth to the sample grid the event actually occupies.
      const double ts = static_cast<double>(i0) / fs, te = static_cast<double>(i1) / fs;
      const double len = te - ts;
      switch (kind) {
        case ArtifactKind::spike: {
          const double amp = art_rng.uniform(150.0, 400.0) * (art_rng.bernoulli(0.5) ? 1.0 : -1.0);
          for (std::size_t i = i0; i < i1; ++i) {
            const double u = (static_cast<double>(i - i0) + 0.5) / static_cast<double>(i1 - i0);
            x[i] += amp * std::sin(M_PI * u);
          }
          break;
        }
        case ArtifactKind::emg_burst: {
          double s = 0.0;
          const std::size_t a = at(e0), b = std::min(n, at(e0 + kEpochS));
          for (std::size_t i = a; i < b; ++i) s += x[i] * x[i];
          const double bg_rms = std::sqrt(s / static_cast<double>(b - a));
          auto burst = band_noise(i1 - i0, 20.0, 60.0, fs, art_rng);
          for (std::size_t i = i0; i < i1; ++i) {
            const double u = (static_cast<double>(i - i0) + 0.5) / static_cast<double>(i1 - i0);
            x[i] += 5.0 * bg_rms * tukey(u, 0.1) * burst[i - i0];
          }
          break;
        }
        case ArtifactKind::motion_step: {
          const double amp = art_rng.uniform(100.0, 300.0) * (art_rng.bernoulli(0.5) ? 1.0 : -1.0);
          const double tau = len / 5.0;
          for (std::size_t i = i0; i < i1; ++i) x[i] += amp * std::exp(-static_cast<double>(i - i0) / fs / tau);
          break;
        }
        case ArtifactKind::amplitude_surge: {
          for (std::size_t i = i0; i < i1; ++i) {
            const double u = (static_cast<double>(i - i0) + 0.5) / static_cast<double>(i1 - i0);
            x[i] *= 1.0 + 3.0 * tukey(u, 0.3);
          }
          break;
        }
      }
      out.truth.push_back({ts, te, std::string(to_string(kind))});
    } else if (has_sweat) {
      const double dur = art_rng.uniform(5.0, 15.0), f = art_rng.uniform(0.2, 0.8);
      const double amp = art_rng.uniform(30.0, 80.0);
      const double t0 = e0 + margin + art_rng.uniform(0.0, kEpochS - dur - 2 * margin);
      const std::size_t i0 = at(t0), i1 = std::min(n, at(t0 + dur));
      const double ph = art_rng.uniform(0.0, 2 * M_PI);
      for (std::size_t i = i0; i < i1; ++i) {
        const double u = (static_cast<double>(i - i0) + 0.5) / static_cast<double>(i1 - i0);
        x[i] += amp * hann(u) * std::sin(2 * M_PI * f * static_cast<double>(i - i0) / fs + ph);
      }
      out.truth.push_back({static_cast<double>(i0) / fs, static_cast<double>(i1) / fs, "sweat"});
    }
  }

  out.recording.id = spec.id;
  out.recording.rate_hz = fs;
  out.recording.samples = std::move(x);
  return out;
}

std::vector<SyntheticSpec> cohort_specs(const CohortSpec& cohort) {
  if (cohort.subjects == 0 || cohort.epochs_per_subject == 0) {
    throw std::invalid_argument("cohort: need at least one subject and one epoch");
  }
  Rng rng(derive_seed(cohort.seed, "cohort"));
  std::vector<SyntheticSpec> out;
  for (std::size_t s = 0; s < cohort.subjects; ++s) {
    SyntheticSpec spec;
    spec.seed = derive_seed(cohort.seed, s + 1);
    char id[16];
    std::snprintf(id, sizeof id, "S%02zu", s + 1);
    spec.id = id;
    spec.rate_hz = cohort.rate_hz;
    spec.artifact_rate = cohort.artifact_rate;
    // A few trailing seconds that do not fill an epoch.
    spec.duration_s = spec.lead_in_s + kEpochS * static_cast<double>(cohort.epochs_per_subject) + 7.0;
    spec.subject_gain = rng.uniform(0.7, 1.4);
    spec.background.pink_noise_gain = rng.uniform(0.8, 1.2);
    spec.background.delta_osc_gain = rng.uniform(0.8, 1.2);
    spec.background.spindle_gain = rng.uniform(0.8, 1.2);
    out.push_back(spec);
  }
  return out;
}

}  // namespace eegart::data
