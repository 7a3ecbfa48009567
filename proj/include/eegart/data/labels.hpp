#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegart/signal/recording.hpp"

namespace eegart::data {

using signal::Epoch;
using signal::Label;

// Continuous-time ground truth, [start_s, end_s) in original-recording seconds.
struct TruthInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string kind;  // spike, emg_burst, motion_step, amplitude_surge, sweat
};

// Kinds that count as artifacts. Sweat-like drifts are recorded but clean.
bool is_artifact_kind(std::string_view kind);

// `local` intervals are epoch-relative, each within [0, epoch length).
// A window is artifact iff some artifact-kind interval overlaps it with
// positive length; the epoch label is the OR of its windows.
void assign_window_labels(Epoch& epoch, std::span<const TruthInterval> local);

// Labels every epoch from recording-time truth, clipping intervals to each
// epoch's span.
void label_epochs(std::vector<Epoch>& epochs, std::span<const TruthInterval> truth);

// Epoch label from window labels: artifact if any window is, unlabeled if
// every window is, clean otherwise.
Label epoch_label_from_windows(const std::array<Label, signal::kWindowsPerEpoch>& windows);

// ---- files ----

struct LabelRecord {
  std::string recording_id;
  std::size_t epoch_index = 0;
  Label label = Label::unlabeled;
  std::array<Label, signal::kWindowsPerEpoch> window_labels{};
};

// JSON lines {recording_id, epoch_index, label, window_labels[5]}.
void write_label_file(const std::filesystem::path& path, std::span<const LabelRecord> records);
std::vector<LabelRecord> read_label_file(const std::filesystem::path& path);
std::vector<LabelRecord> label_records(const std::string& recording_id, std::span<const Epoch> epochs);
// Copies labels onto epochs by epoch_index; epochs without a record stay unlabeled.
void apply_labels(std::vector<Epoch>& epochs, std::span<const LabelRecord> records);

// JSON list of {start_s, end_s, kind}.
void write_truth_file(const std::filesystem::path& path, std::span<const TruthInterval> truth);
std::vector<TruthInterval> read_truth_file(const std::filesystem::path& path);

enum class Stage { W, N1, N2, N3, REM };
std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view s);
bool is_nrem(Stage s);

// JSON lines {epoch_index, stage}; the returned vector is indexed by epoch.
void write_stage_file(const std::filesystem::path& path, std::span<const Stage> stages);
std::vector<Stage> read_stage_file(const std::filesystem::path& path);

}  // namespace eegart::data
