#include "eegart/data/labels.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "eegart/util/binary_io.hpp"
#include "eegart/util/errors.hpp"
#include "json.hpp"

namespace eegart::data {

using nlohmann::json;
using signal::kWindowSeconds;
using signal::kWindowsPerEpoch;

bool is_artifact_kind(std::string_view kind) { return kind != "sweat"; }

Label epoch_label_from_windows(const std::array<Label, kWindowsPerEpoch>& windows) {
  bool any_labeled = false;
  for (Label l : windows) {
    if (l == Label::artifact) return Label::artifact;
    any_labeled = any_labeled || l == Label::clean;
  }
  return any_labeled ? Label::clean : Label::unlabeled;
}

void assign_window_labels(Epoch& epoch, std::span<const TruthInterval> local) {
  const double epoch_len = kWindowSeconds * kWindowsPerEpoch;
  epoch.window_labels.fill(Label::clean);
  for (const auto& iv : local) {
    if (!(iv.start_s >= 0.0 && iv.end_s <= epoch_len && iv.start_s < iv.end_s)) {
      throw std::invalid_argument("assign_window_labels: interval [" + std::to_string(iv.start_s) +
                                  ", " + std::to_string(iv.end_s) + ") is not inside [0, " +
                                  std::to_string(epoch_len) + ")");
    }
    if (!is_artifact_kind(iv.kind)) continue;
    for (std::size_t k = 0; k < kWindowsPerEpoch; ++k) {
      const double w0 = kWindowSeconds * static_cast<double>(k), w1 = w0 + kWindowSeconds;
      if (iv.start_s < w1 && iv.end_s > w0) epoch.window_labels[k] = Label::artifact;
    }
  }
  epoch.label = epoch_label_from_windows(epoch.window_labels);
}

void label_epochs(std::vector<Epoch>& epochs, std::span<const TruthInterval> truth) {
  const double epoch_len = kWindowSeconds * kWindowsPerEpoch;
  std::vector<TruthInterval> local;
  for (auto& ep : epochs) {
    local.clear();
    const double e0 = ep.start_s, e1 = ep.start_s + epoch_len;
    for (const auto& iv : truth) {
      if (iv.end_s <= e0 || iv.start_s >= e1) continue;
      local.push_back({std::max(iv.start_s, e0) - e0, std::min(iv.end_s, e1) - e0, iv.kind});
    }
    assign_window_labels(ep, local);
  }
}

std::vector<LabelRecord> label_records(const std::string& recording_id, std::span<const Epoch> epochs) {
  std::vector<LabelRecord> out;
  out.reserve(epochs.size());
  for (const auto& ep : epochs) out.push_back({recording_id, ep.epoch_index, ep.label, ep.window_labels});
  return out;
}

void apply_labels(std::vector<Epoch>& epochs, std::span<const LabelRecord> records) {
  for (const auto& r : records) {
    for (auto& ep : epochs) {
      if (ep.epoch_index != r.epoch_index) continue;
      ep.label = r.label;
      ep.window_labels = r.window_labels;
    }
  }
}

void write_label_file(const std::filesystem::path& path, std::span<const LabelRecord> records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["recording_id"] = r.recording_id;
    j["epoch_index"] = r.epoch_index;
    j["label"] = std::string(signal::to_string(r.label));
    j["window_labels"] = json::array();
    for (Label l : r.window_labels) j["window_labels"].push_back(std::string(signal::to_string(l)));
    out += j.dump() + "\n";
  }
  write_file_atomic(path, std::string_view(out));
}

namespace {
template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::istringstream in(read_file_text(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}
}  // namespace

std::vector<LabelRecord> read_label_file(const std::filesystem::path& path) {
  std::vector<LabelRecord> out;
  for_each_json_line(path, [&](const json& j) {
    LabelRecord r;
    r.recording_id = j.at("recording_id").get<std::string>();
    r.epoch_index = j.at("epoch_index").get<std::size_t>();
    r.label = signal::label_from_string(j.at("label").get<std::string>());
    const auto& w = j.at("window_labels");
    if (!w.is_array() || w.size() != kWindowsPerEpoch) throw std::invalid_argument("window_labels must have 5 entries");
    for (std::size_t k = 0; k < kWindowsPerEpoch; ++k) r.window_labels[k] = signal::label_from_string(w[k].get<std::string>());
    if (epoch_label_from_windows(r.window_labels) == Label::artifact && r.label != Label::artifact) {
      throw std::invalid_argument("epoch label disagrees with its window labels");
    }
    out.push_back(std::move(r));
  });
  return out;
}

void write_truth_file(const std::filesystem::path& path, std::span<const TruthInterval> truth) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& iv : truth) {
    nlohmann::ordered_json j;
    j["start_s"] = iv.start_s;
    j["end_s"] = iv.end_s;
    j["kind"] = iv.kind;
    arr.push_back(j);
  }
  write_file_atomic(path, std::string_view(arr.dump(1) + "\n"));
}

std::vector<TruthInterval> read_truth_file(const std::filesystem::path& path) {
  std::vector<TruthInterval> out;
  try {
    const json arr = json::parse(read_file_text(path));
    for (const auto& j : arr) {
      out.push_back({j.at("start_s").get<double>(), j.at("end_s").get<double>(), j.at("kind").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return out;
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::W: return "W";
    case Stage::N1: return "N1";
    case Stage::N2: return "N2";
    case Stage::N3: return "N3";
    case Stage::REM: return "REM";
  }
  return "W";
}

Stage stage_from_string(std::string_view s) {
  if (s == "W") return Stage::W;
  if (s == "N1") return Stage::N1;
  if (s == "N2") return Stage::N2;
  if (s == "N3") return Stage::N3;
  if (s == "REM") return Stage::REM;
  throw std::invalid_argument("unknown sleep stage '" + std::string(s) + "'");
}

bool is_nrem(Stage s) { return s == Stage::N1 || s == Stage::N2 || s == Stage::N3; }

void write_stage_file(const std::filesystem::path& path, std::span<const Stage> stages) {
  std::string out;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    nlohmann::ordered_json j;
    j["epoch_index"] = i;
    j["stage"] = std::string(to_string(stages[i]));
    out += j.dump() + "\n";
  }
  write_file_atomic(path, std::string_view(out));
}

std::vector<Stage> read_stage_file(const std::filesystem::path& path) {
  std::vector<std::pair<std::size_t, Stage>> rows;
  for_each_json_line(path, [&](const json& j) {
    rows.emplace_back(j.at("epoch_index").get<std::size_t>(), stage_from_string(j.at("stage").get<std::string>()));
  });
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Stage> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != i) throw FormatError(path.string() + ": epoch indices must be 0..n-1 without gaps");
    out.push_back(rows[i].second);
  }
  return out;
}

}  // namespace eegart::data
