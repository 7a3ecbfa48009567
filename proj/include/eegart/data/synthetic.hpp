#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eegart/data/labels.hpp"
#include "eegart/signal/recording.hpp"

namespace eegart::data {

enum class ArtifactKind { spike, emg_burst, motion_step, amplitude_surge };
std::string_view to_string(ArtifactKind k);
ArtifactKind artifact_kind_from_string(std::string_view s);

struct BackgroundGains {
  double pink_noise_gain = 1.0;
  double delta_osc_gain = 1.0;  // 0.75-4.5 Hz
  double spindle_gain = 1.0;    // 11-15 Hz
};

struct SyntheticSpec {
  std::uint64_t seed = 0;
  std::string id = "synthetic";
  double duration_s = 3600.0;
  double rate_hz = 250.0;
  // Fraction of scoring epochs that receive one artifact event.
  double artifact_rate = 0.045;
  std::vector<ArtifactKind> artifact_kinds{ArtifactKind::spike, ArtifactKind::emg_burst,
                                           ArtifactKind::motion_step,
                                           ArtifactKind::amplitude_surge};
  BackgroundGains background;
  // Fraction of artifact-free epochs that receive a clean sub-1 Hz drift.
  double sweat_rate = 0.03;
  // Length of the unscored lead-in; epochs start after it.
  double lead_in_s = 20.0;
  double subject_gain = 1.0;  // scales the background only
  double mains_uv = 2.0;      // 50 Hz line interference amplitude

  void validate() const;
  std::size_t epoch_count() const;
};

struct SyntheticRecording {
  signal::Recording recording;
  std::vector<TruthInterval> truth;  // recording time, sorted, non-overlapping
  std::vector<Stage> stages;         // per scoring epoch
};

SyntheticRecording generate_synthetic(const SyntheticSpec& spec);

struct CohortSpec {
  std::uint64_t seed = 0;
  std::size_t subjects = 12;
  std::size_t epochs_per_subject = 250;
  double artifact_rate = 0.045;
  double rate_hz = 250.0;
};

// One recording per subject (ids S01, S02, ...), each with its own derived
// seed and background gain.
std::vector<SyntheticSpec> cohort_specs(const CohortSpec& cohort);

}  // namespace eegart::data
