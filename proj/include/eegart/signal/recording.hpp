#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace eegart::signal {

inline constexpr double kModelRateHz = 128.0;
inline constexpr double kEpochSeconds = 20.0;
inline constexpr double kWindowSeconds = 4.0;
inline constexpr std::size_t kEpochLength = 2560;
inline constexpr std::size_t kWindowsPerEpoch = 5;

// Single-channel recording in microvolts.
struct Recording {
  std::string id;
  double rate_hz = 0.0;
  double start_offset_s = 0.0;  // seconds trimmed from the front of the original
  std::vector<double> samples;

  double duration_s() const { return static_cast<double>(samples.size()) / rate_hz; }
  // Throws std::invalid_argument unless rate_hz > 0 and samples is non-empty.
  void validate() const;
};

enum class Label { clean, artifact, unlabeled };

std::string_view to_string(Label l);
Label label_from_string(std::string_view s);

struct Epoch {
  std::size_t epoch_index = 0;
  double start_s = 0.0;            // in original-recording time (includes start_offset_s)
  std::vector<double> values;      // min-max scaled
  bool degenerate = false;         // constant before scaling
  Label label = Label::unlabeled;
  std::array<Label, kWindowsPerEpoch> window_labels{Label::unlabeled, Label::unlabeled,
                                                    Label::unlabeled, Label::unlabeled,
                                                    Label::unlabeled};
};

}  // namespace eegart::signal
