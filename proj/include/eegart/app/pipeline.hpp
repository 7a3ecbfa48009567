#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eegart/data/labels.hpp"
#include "eegart/data/split.hpp"
#include "eegart/data/synthetic.hpp"
#include "eegart/eval/metrics.hpp"
#include "eegart/models/model.hpp"
#include "json.hpp"

namespace eegart::app {

namespace fs = std::filesystem;

// Input that cannot be processed (empty recording, missing files, mismatched
// labels). The CLI maps it to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Logger = std::function<void(const std::string&)>;

// ---- dataset directories ----
//
// <id>.json + <id>.f32   raw recording
// <id>.csv               CSV recording (alternative)
// <id>.labels.jsonl      per-epoch labels
// <id>.truth.json        synthetic ground truth (optional)
// <id>.stages.jsonl      sleep stages (optional)
// cohort.json            generator parameters (synthetic sets only)

fs::path labels_path(const fs::path& dir, const std::string& id);
fs::path truth_path(const fs::path& dir, const std::string& id);
fs::path stages_path(const fs::path& dir, const std::string& id);

// Recording files in `dir`, sorted by id.
std::vector<fs::path> list_recordings(const fs::path& dir);
std::string recording_id(const fs::path& recording_file);

// Reads and validates a recording; throws InputError for empty input.
signal::Recording load_recording(const fs::path& path);

struct SubjectData {
  std::string id;
  signal::Recording recording;
  std::vector<signal::Epoch> epochs;  // preprocessed, labels applied
  std::optional<std::vector<data::Stage>> stages;
};
SubjectData load_subject(const fs::path& recording_file, bool require_labels);

// Cohort JSON: any of {subjects, epochs_per_subject, artifact_rate, rate_hz}.
data::CohortSpec cohort_from_json(const nlohmann::json& j, std::uint64_t seed);
nlohmann::ordered_json cohort_to_json(const data::CohortSpec& c);
// Writes one recording (+ labels, truth, stages) per subject and cohort.json.
std::vector<std::string> synthesize_dataset(const data::CohortSpec& cohort, const fs::path& out);

// ---- training ----

struct TrainOptions {
  models::ModelConfig model;
  nn::TrainConfig train;
  data::SplitFractions fractions;
  std::size_t smote_k = 5;
  std::size_t predict_batch = 64;
  Logger log;
};

struct TrainOutcome {
  std::unique_ptr<models::Model<float>> model;
  data::SubjectSplit split;
  double threshold = 0.5;               // epoch-level operating point
  double localization_threshold = 0.5;  // CBAM kinds only
  nlohmann::ordered_json summary;       // stored in the weight-file header
};

// Subject split -> SMOTE on train and validation -> training (two-phase for
// heuristic_1dcnn) -> operating thresholds from the real validation epochs.
TrainOutcome train_on_dataset(const fs::path& dir, const TrainOptions& opt);
nn::WeightFile outcome_weight_file(const TrainOutcome& outcome);

// ---- inference ----

struct EpochPrediction {
  std::size_t epoch_index = 0;
  double start_s = 0.0;
  double probability = 0.0;  // artifact class
  bool artifact = false;
  bool degenerate = false;
};

std::vector<double> predict_probabilities(const models::Model<float>& model,
                                          const std::vector<signal::Epoch>& epochs,
                                          std::size_t batch = 64);

struct LoadedModel {
  std::unique_ptr<models::Model<float>> model;
  nlohmann::json header;
  double threshold = 0.5;
  double localization_threshold = 0.5;
};
LoadedModel load_model(const fs::path& weights);

struct Detection {
  std::string recording_id;
  std::string model_kind;
  double threshold = 0.5;
  std::optional<double> localization_threshold;  // CBAM kinds
  std::vector<EpochPrediction> epochs;
  std::vector<attention::AttentionMap> maps;  // CBAM kinds, one per epoch
};
Detection detect(const LoadedModel& model, const signal::Recording& rec);

// JSON lines {recording_id, model, threshold, [localization_threshold,] epoch_index, start_s,
// probability, artifact, degenerate}.
std::string report_jsonl(const Detection& d);
// JSON lines {recording_id, epoch_index, time_scale_s_per_step, edge_steps, degenerate, values}.
std::string maps_jsonl(const Detection& d);
// `<report stem>.maps.jsonl` next to the report.
fs::path maps_path_for(const fs::path& report);

struct ReportRow {
  std::string recording_id, model;
  std::size_t epoch_index = 0;
  double start_s = 0.0, probability = 0.0, threshold = 0.5;
  std::optional<double> localization_threshold;
  bool artifact = false, degenerate = false;
};
std::vector<ReportRow> read_report(const fs::path& path);
std::vector<std::pair<std::string, attention::AttentionMap>> read_maps(const fs::path& path);

// JSON lines {recording_id, epoch_index, probability, artifact, threshold, intervals}.
std::string localization_jsonl(const Detection& d, double threshold);

// ---- evaluation ----

struct EvalOptions {
  fs::path reports_dir, labels_dir;
  std::optional<fs::path> plots_dir;
  std::size_t attention_figures = 6;
};
nlohmann::ordered_json evaluate(const EvalOptions& opt);

// True for a detection report (not a maps, labels or localization file).
bool is_report_file(const fs::path& path);

}  // namespace eegart::app
