#include "eegart/app/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "eegart/detectors/detectors.hpp"
#include "eegart/signal/dsp.hpp"
#include "eegart/signal/recording_io.hpp"
#include "eegart/data/smote.hpp"
#include "eegart/util/binary_io.hpp"
#include "eegart/util/errors.hpp"

namespace eegart::app {

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void log(const Logger& l, const std::string& msg) {
  if (l) l(msg);
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_file_text(path));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

nlohmann::json parse_line(const std::string& line, const fs::path& path) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed JSON line: " + e.what());
  }
}

std::vector<int> binary_labels(const std::vector<signal::Epoch>& epochs) {
  std::vector<int> y;
  for (const auto& e : epochs) y.push_back(e.label == signal::Label::artifact);
  return y;
}

std::array<bool, signal::kWindowsPerEpoch> window_truth(const signal::Epoch& e) {
  std::array<bool, signal::kWindowsPerEpoch> w{};
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = e.window_labels[k] == signal::Label::artifact;
  return w;
}

bool windows_labeled(const signal::Epoch& e) {
  return std::none_of(e.window_labels.begin(), e.window_labels.end(),
                      [](signal::Label l) { return l == signal::Label::unlabeled; });
}

// Real epochs plus SMOTE samples of the artifact class up to the clean count.
nn::Samples balanced_samples(const std::vector<signal::Epoch>& epochs, std::size_t k,
                             std::uint64_t seed, nlohmann::ordered_json& stats) {
  nn::Samples s;
  std::vector<std::vector<double>> minority;
  std::size_t clean = 0;
  for (const auto& e : epochs) {
    if (e.label == signal::Label::unlabeled) continue;
    const bool art = e.label == signal::Label::artifact;
    s.add(std::span<const double>(e.values), art ? 1 : 0);
    if (art) {
      minority.push_back(e.values);
    } else {
      ++clean;
    }
  }
  stats["clean"] = clean;
  stats["artifact"] = minority.size();
  std::size_t synthetic = 0;
  if (clean > minority.size()) {
    if (minority.size() <= k) {
      throw InputError("need more than " + std::to_string(k) +
                       " artifact epochs per split for oversampling, found " +
                       std::to_string(minority.size()));
    }
    const auto extra = data::smote_oversample(minority, k, clean - minority.size(), seed);
    for (const auto& x : extra) s.add(std::span<const double>(x.values), 1);
    synthetic = extra.size();
  }
  stats["smote"] = synthetic;
  return s;
}

nlohmann::ordered_json history_json(const nn::TrainHistory& h) {
  nlohmann::ordered_json j;
  j["best_epoch"] = h.best_epoch;
  j["best_val_loss"] = h.best_val_loss;
  j["stopped_early"] = h.stopped_early;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& e : h.epochs) rows.push_back({e.epoch, e.train_loss, e.val_loss});
  j["epochs"] = std::move(rows);  // [epoch, train_loss, val_loss]
  return j;
}

attention::AttentionMap map_from_capture(const nn::Tensor<float>& cap, std::size_t b, double ts) {
  const std::size_t C = cap.dim(1), L = cap.dim(2);
  nn::Tensor<double> a({C, L});
  std::copy(cap.ptr() + b * C * L, cap.ptr() + (b + 1) * C * L, a.ptr());
  return attention::activation_attention_map(a, ts);
}

// Probabilities and (for CBAM kinds) attention maps in one batched pass.
void infer(const models::Model<float>& model, const std::vector<signal::Epoch>& epochs,
           std::size_t batch, std::vector<double>& probs, std::vector<attention::AttentionMap>* maps) {
  nn::NoGradGuard no_grad;
  const std::size_t L = models::Model<float>::kInputLength;
  for (std::size_t start = 0; start < epochs.size(); start += batch) {
    const std::size_t n = std::min(batch, epochs.size() - start);
    nn::Tensor<float> x({n, 1, L});
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = epochs[start + i].values;
      if (v.size() != L) throw InputError("epoch length " + std::to_string(v.size()) + " != " + std::to_string(L));
      std::transform(v.begin(), v.end(), x.ptr() + i * L, [](double d) { return static_cast<float>(d); });
    }
    nn::Tensor<float> captured;
    nn::ForwardContext<float> ctx;
    if (maps) ctx.attention_capture = &captured;
    const auto p = nn::softmax(model.forward(x, ctx)).value();
    for (std::size_t i = 0; i < n; ++i) {
      probs.push_back(p.at(i, 1));
      if (maps) {
        auto m = map_from_capture(captured, i, model.attention_time_scale_s());
        m.epoch_index = epochs[start + i].epoch_index;
        maps->push_back(std::move(m));
      }
    }
  }
}

}  // namespace

fs::path labels_path(const fs::path& dir, const std::string& id) { return dir / (id + ".labels.jsonl"); }
fs::path truth_path(const fs::path& dir, const std::string& id) { return dir / (id + ".truth.json"); }
fs::path stages_path(const fs::path& dir, const std::string& id) { return dir / (id + ".stages.jsonl"); }

std::vector<fs::path> list_recordings(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path& p = entry.path();
    if (!entry.is_regular_file()) continue;
    if (p.extension() == ".csv") {
      out.push_back(p);
    } else if (p.extension() == ".json" && fs::exists(fs::path(p).replace_extension(".f32"))) {
      out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.stem().string() < b.stem().string(); });
  return out;
}

std::string recording_id(const fs::path& recording_file) { return recording_file.stem().string(); }

signal::Recording load_recording(const fs::path& path) {
  if (!fs::exists(path) && !fs::exists(fs::path(path).replace_extension(".json"))) {
    throw InputError("recording not found: " + path.string());
  }
  signal::Recording rec = signal::read_recording(path);
  if (rec.samples.empty()) throw InputError("recording " + path.string() + " is empty");
  rec.validate();
  return rec;
}

SubjectData load_subject(const fs::path& recording_file, bool require_labels) {
  SubjectData s;
  s.recording = load_recording(recording_file);
  s.id = s.recording.id.empty() ? recording_id(recording_file) : s.recording.id;
  s.epochs = signal::preprocess(s.recording);
  const fs::path dir = recording_file.parent_path();
  const fs::path lp = labels_path(dir, recording_id(recording_file));
  if (fs::exists(lp)) {
    data::apply_labels(s.epochs, data::read_label_file(lp));
  } else if (require_labels) {
    throw InputError("missing label file " + lp.string());
  }
  const fs::path sp = stages_path(dir, recording_id(recording_file));
  if (fs::exists(sp)) s.stages = data::read_stage_file(sp);
  return s;
}

data::CohortSpec cohort_from_json(const nlohmann::json& j, std::uint64_t seed) {
  data::CohortSpec c;
  c.seed = seed;
  if (!j.is_object()) throw InputError("cohort spec must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    static const std::set<std::string> known{"subjects", "epochs_per_subject", "artifact_rate", "rate_hz", "seed"};
    if (!known.count(key)) throw InputError("unknown cohort field: " + key);
  }
  c.subjects = j.value("subjects", c.subjects);
  c.epochs_per_subject = j.value("epochs_per_subject", c.epochs_per_subject);
  c.artifact_rate = j.value("artifact_rate", c.artifact_rate);
  c.rate_hz = j.value("rate_hz", c.rate_hz);
  return c;
}

nlohmann::ordered_json cohort_to_json(const data::CohortSpec& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["subjects"] = c.subjects;
  j["epochs_per_subject"] = c.epochs_per_subject;
  j["artifact_rate"] = c.artifact_rate;
  j["rate_hz"] = c.rate_hz;
  return j;
}

std::vector<std::string> synthesize_dataset(const data::CohortSpec& cohort, const fs::path& out) {
  fs::create_directories(out);
  std::vector<std::string> ids;
  nlohmann::ordered_json manifest = cohort_to_json(cohort);
  auto recs = nlohmann::ordered_json::array();
  for (const auto& spec : data::cohort_specs(cohort)) {
    const auto syn = data::generate_synthetic(spec);
    signal::write_raw_recording(out / spec.id, syn.recording);
    auto epochs = signal::preprocess(syn.recording);
    data::label_epochs(epochs, syn.truth);
    const auto records = data::label_records(spec.id, epochs);
    data::write_label_file(labels_path(out, spec.id), records);
    data::write_truth_file(truth_path(out, spec.id), syn.truth);
    data::write_stage_file(stages_path(out, spec.id), syn.stages);
    std::size_t artifacts = 0;
    for (const auto& e : epochs) artifacts += e.label == signal::Label::artifact;
    recs.push_back({{"id", spec.id},
                    {"epochs", epochs.size()},
                    {"artifact_epochs", artifacts},
                    {"subject_gain", spec.subject_gain}});
    ids.push_back(spec.id);
  }
  manifest["recordings"] = std::move(recs);
  write_file_atomic(out / "cohort.json", manifest.dump(2) + "\n");
  return ids;
}

TrainOutcome train_on_dataset(const fs::path& dir, const TrainOptions& opt) {
  const auto files = list_recordings(dir);
  if (files.size() < 3) throw InputError("need at least 3 labeled recordings in " + dir.string());
  std::map<std::string, fs::path> by_id;
  std::vector<std::string> ids;
  for (const auto& f : files) {
    ids.push_back(recording_id(f));
    by_id[ids.back()] = f;
  }
  const std::uint64_t seed = opt.train.seed;
  TrainOutcome out;
  out.split = data::split_by_subject(ids, opt.fractions, derive_seed(seed, "split"));

  auto gather = [&](const std::vector<std::string>& subjects) {
    std::vector<signal::Epoch> epochs;
    for (const auto& id : subjects) {
      auto s = load_subject(by_id.at(id), true);
      for (auto& e : s.epochs) epochs.push_back(std::move(e));
    }
    return epochs;
  };
  const auto train_epochs = gather(out.split.train);
  const auto val_epochs = gather(out.split.validation);

  nlohmann::ordered_json train_stats, val_stats;
  const nn::Samples train_set = balanced_samples(train_epochs, opt.smote_k, derive_seed(seed, "smote-train"), train_stats);
  const nn::Samples val_set = balanced_samples(val_epochs, opt.smote_k, derive_seed(seed, "smote-validation"), val_stats);
  log(opt.log, "train samples " + std::to_string(train_set.size()) + ", validation samples " +
                   std::to_string(val_set.size()));

  out.model = std::make_unique<models::Model<float>>(opt.model);
  nn::TrainConfig cfg = opt.train;
  cfg.seed = derive_seed(seed, "train");
  nlohmann::ordered_json history;
  if (opt.model.kind == models::ModelKind::heuristic_1dcnn) {
    const auto r = nn::train_dual_optimizer(*out.model, train_set, val_set, cfg,
                                            out.model->feature_parameters(),
                                            out.model->head_parameters());
    history["features"] = history_json(r.features.history);
    history["head"] = history_json(r.head.history);
  } else {
    history = history_json(nn::train(*out.model, train_set, val_set, cfg).history);
  }

  // Operating points on the real (non-synthetic) validation epochs.
  std::vector<signal::Epoch> labeled;
  for (const auto& e : val_epochs)
    if (e.label != signal::Label::unlabeled) labeled.push_back(e);
  std::vector<double> probs;
  const bool cbam = models::has_cbam(opt.model.kind);
  std::vector<attention::AttentionMap> maps;
  infer(*out.model, labeled, opt.predict_batch, probs, cbam ? &maps : nullptr);
  const auto y = binary_labels(labeled);
  nlohmann::ordered_json val_metrics;
  try {
    const auto roc = eval::roc_auc(probs, y);
    out.threshold = roc.best.threshold;
    val_metrics["auc"] = roc.auc;
    val_metrics["best"] = eval::to_json(roc.best);
  } catch (const std::invalid_argument& e) {
    log(opt.log, std::string("validation ROC unavailable, keeping threshold 0.5: ") + e.what());
  }
  if (cbam) {
    std::vector<eval::LocalizationCase> cases;
    for (std::size_t i = 0; i < labeled.size(); ++i)
      if (probs[i] >= out.threshold && windows_labeled(labeled[i]))
        cases.push_back({maps[i], window_truth(labeled[i])});
    try {
      const auto sweep = eval::sweep_localization_threshold(cases);
      out.localization_threshold = sweep.best.threshold;
      val_metrics["localization_best"] = eval::to_json(sweep.best);
    } catch (const std::invalid_argument& e) {
      log(opt.log, std::string("validation localization sweep unavailable, keeping 0.5: ") + e.what());
    }
  }

  nlohmann::ordered_json split;
  split["train"] = out.split.train;
  split["validation"] = out.split.validation;
  split["test"] = out.split.test;
  out.summary["split"] = std::move(split);
  out.summary["samples"] = {{"train", train_stats}, {"validation", val_stats}};
  out.summary["train_config"] = {{"batch_size", cfg.batch_size},
                                 {"max_epochs", cfg.max_epochs},
                                 {"patience", cfg.patience},
                                 {"lr", cfg.adam.lr},
                                 {"seed", seed},
                                 {"smote_k", opt.smote_k}};
  out.summary["history"] = std::move(history);
  out.summary["validation"] = std::move(val_metrics);
  return out;
}

nn::WeightFile outcome_weight_file(const TrainOutcome& outcome) {
  nlohmann::json extra = nlohmann::json(outcome.summary);
  extra["threshold"] = outcome.threshold;
  extra["localization_threshold"] = outcome.localization_threshold;
  return models::to_weight_file(*outcome.model, extra);
}

std::vector<double> predict_probabilities(const models::Model<float>& model,
                                          const std::vector<signal::Epoch>& epochs, std::size_t batch) {
  std::vector<double> probs;
  infer(model, epochs, batch, probs, nullptr);
  return probs;
}

LoadedModel load_model(const fs::path& weights) {
  if (!fs::exists(weights)) throw InputError("weights not found: " + weights.string());
  const auto file = nn::read_weight_file(weights);
  LoadedModel m;
  m.model = models::model_from_weight_file(file);
  m.header = file.header;
  m.threshold = file.header.value("threshold", 0.5);
  m.localization_threshold = file.header.value("localization_threshold", 0.5);
  return m;
}

Detection detect(const LoadedModel& model, const signal::Recording& rec) {
  if (rec.samples.empty()) throw InputError("recording " + rec.id + " is empty");
  const auto epochs = signal::preprocess(rec);
  if (epochs.empty()) throw InputError("recording " + rec.id + " is shorter than one epoch after trimming");
  Detection d;
  d.recording_id = rec.id;
  d.model_kind = models::to_string(model.model->kind());
  d.threshold = model.threshold;
  std::vector<double> probs;
  const bool cbam = models::has_cbam(model.model->kind());
  if (cbam) d.localization_threshold = model.localization_threshold;
  infer(*model.model, epochs, 64, probs, cbam ? &d.maps : nullptr);
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    d.epochs.push_back({epochs[i].epoch_index, epochs[i].start_s, probs[i], probs[i] >= d.threshold,
                        epochs[i].degenerate});
  }
  return d;
}

std::string report_jsonl(const Detection& d) {
  std::string out;
  for (const auto& e : d.epochs) {
    nlohmann::ordered_json j;
    j["recording_id"] = d.recording_id;
    j["model"] = d.model_kind;
    j["threshold"] = d.threshold;
    if (d.localization_threshold) j["localization_threshold"] = *d.localization_threshold;
    j["epoch_index"] = e.epoch_index;
    j["start_s"] = e.start_s;
    j["probability"] = e.probability;
    j["artifact"] = e.artifact;
    j["degenerate"] = e.degenerate;
    out += j.dump() + "\n";
  }
  return out;
}

std::string maps_jsonl(const Detection& d) {
  std::string out;
  for (const auto& m : d.maps) {
    nlohmann::ordered_json j;
    j["recording_id"] = d.recording_id;
    const auto body = attention::to_json(m);
    for (const auto& [k, v] : body.items()) j[k] = v;
    out += j.dump() + "\n";
  }
  return out;
}

fs::path maps_path_for(const fs::path& report) {
  std::string name = report.filename().string();
  if (ends_with(name, ".jsonl")) name.resize(name.size() - 6);
  return report.parent_path() / (name + ".maps.jsonl");
}

std::vector<ReportRow> read_report(const fs::path& path) {
  std::vector<ReportRow> rows;
  for (const auto& line : read_lines(path)) {
    const auto j = parse_line(line, path);
    try {
      ReportRow r;
      r.recording_id = j.at("recording_id").get<std::string>();
      r.model = j.at("model").get<std::string>();
      r.threshold = j.at("threshold").get<double>();
      if (j.contains("localization_threshold")) r.localization_threshold = j["localization_threshold"].get<double>();
      r.epoch_index = j.at("epoch_index").get<std::size_t>();
      r.start_s = j.at("start_s").get<double>();
      r.probability = j.at("probability").get<double>();
      r.artifact = j.at("artifact").get<bool>();
      r.degenerate = j.value("degenerate", false);
      rows.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ": bad report row: " + e.what());
    }
  }
  return rows;
}

std::vector<std::pair<std::string, attention::AttentionMap>> read_maps(const fs::path& path) {
  std::vector<std::pair<std::string, attention::AttentionMap>> out;
  for (const auto& line : read_lines(path)) {
    const auto j = parse_line(line, path);
    try {
      out.emplace_back(j.at("recording_id").get<std::string>(), attention::attention_map_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ": bad map row: " + e.what());
    }
  }
  return out;
}

std::string localization_jsonl(const Detection& d, double threshold) {
  if (d.maps.size() != d.epochs.size()) throw InputError("model " + d.model_kind + " has no attention maps");
  std::string out;
  for (std::size_t i = 0; i < d.epochs.size(); ++i) {
    nlohmann::ordered_json j;
    j["recording_id"] = d.recording_id;
    j["epoch_index"] = d.epochs[i].epoch_index;
    j["probability"] = d.epochs[i].probability;
    j["artifact"] = d.epochs[i].artifact;
    j["threshold"] = threshold;
    j["degenerate_map"] = d.maps[i].degenerate;
    auto iv = nlohmann::ordered_json::array();
    for (const auto& r : eval::localize(d.maps[i], threshold)) iv.push_back({r.start_s, r.end_s});
    j["intervals"] = std::move(iv);
    out += j.dump() + "\n";
  }
  return out;
}

bool is_report_file(const fs::path& path) {
  const std::string name = path.filename().string();
  if (!ends_with(name, ".jsonl") || ends_with(name, ".maps.jsonl") || ends_with(name, ".labels.jsonl") ||
      ends_with(name, ".stages.jsonl"))
    return false;
  std::ifstream in(path);
  std::string first;
  if (!std::getline(in, first) || first.empty()) return false;
  const auto j = nlohmann::json::parse(first, nullptr, false);
  return j.is_object() && j.contains("probability") && j.contains("model") && !j.contains("intervals");
}

nlohmann::ordered_json evaluate(const EvalOptions& opt) {
  if (!fs::is_directory(opt.reports_dir)) throw InputError("not a directory: " + opt.reports_dir.string());
  std::vector<fs::path> reports;
  for (const auto& entry : fs::directory_iterator(opt.reports_dir))
    if (entry.is_regular_file() && is_report_file(entry.path())) reports.push_back(entry.path());
  std::sort(reports.begin(), reports.end());
  if (reports.empty()) throw InputError("no detection reports in " + opt.reports_dir.string());

  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<eval::LocalizationCase> loc_cases;
  std::vector<std::pair<signal::Epoch, attention::AttentionMap>> figures;
  std::vector<double> std_scores;
  std::vector<int> std_labels;
  std::vector<double> spec_scores;
  std::vector<int> spec_labels;
  eval::ConfusionMatrix spec_cm;
  std::string model;
  double threshold = 0.5;
  eval::ConfusionMatrix at_operating;
  nlohmann::ordered_json recordings = nlohmann::ordered_json::array();

  for (const auto& rp : reports) {
    const auto rows = read_report(rp);
    if (rows.empty()) continue;
    const std::string id = rows.front().recording_id;
    model = rows.front().model;
    threshold = rows.front().threshold;
    const fs::path lp = labels_path(opt.labels_dir, id);
    if (!fs::exists(lp)) throw InputError("missing labels for " + id + ": " + lp.string());
    std::map<std::size_t, data::LabelRecord> lab;
    for (auto& r : data::read_label_file(lp)) lab[r.epoch_index] = r;

    std::map<std::size_t, attention::AttentionMap> maps;
    const fs::path mp = maps_path_for(rp);
    if (fs::exists(mp))
      for (auto& [rid, m] : read_maps(mp))
        if (rid == id) maps[m.epoch_index] = std::move(m);

    // Recordings next to the labels enable the baselines and figures.
    std::optional<SubjectData> subject;
    for (const char* ext : {".json", ".csv"}) {
      const fs::path cand = opt.labels_dir / (id + ext);
      if (fs::exists(cand) && (std::string(ext) == ".csv" || fs::exists(opt.labels_dir / (id + ".f32")))) {
        subject = load_subject(cand, true);
        break;
      }
    }

    std::size_t used = 0;
    for (const auto& r : rows) {
      const auto it = lab.find(r.epoch_index);
      if (it == lab.end() || it->second.label == signal::Label::unlabeled) continue;
      const bool truth = it->second.label == signal::Label::artifact;
      scores.push_back(r.probability);
      labels.push_back(truth);
      at_operating.add(r.artifact, truth);
      ++used;
      const auto m = maps.find(r.epoch_index);
      if (r.artifact && m != maps.end()) {
        signal::Epoch e;
        e.window_labels = it->second.window_labels;
        if (!windows_labeled(e)) continue;
        loc_cases.push_back({m->second, window_truth(e)});
        if (truth && subject && figures.size() < opt.attention_figures && r.epoch_index < subject->epochs.size())
          figures.emplace_back(subject->epochs[r.epoch_index], m->second);
      }
    }
    recordings.push_back({{"id", id}, {"report", rp.filename().string()}, {"scored_epochs", used}});

    if (subject) {
      const auto sd = detectors::std_detect(subject->recording);
      for (std::size_t i = 0; i < subject->epochs.size() && i < sd.scores.epoch_max_z.size(); ++i) {
        const auto& e = subject->epochs[i];
        if (e.label == signal::Label::unlabeled) continue;
        std_scores.push_back(sd.scores.epoch_max_z[i]);
        std_labels.push_back(e.label == signal::Label::artifact);
      }
      if (subject->stages) {
        const auto sr = detectors::spectral_detect(subject->recording, *subject->stages);
        for (std::size_t i = 0; i < subject->epochs.size() && i < sr.epochs.size(); ++i) {
          const auto& e = subject->epochs[i];
          if (e.label == signal::Label::unlabeled || sr.epochs[i].verdict == detectors::SpectralVerdict::not_applicable)
            continue;
          const bool truth = e.label == signal::Label::artifact;
          spec_scores.push_back(sr.epochs[i].score);
          spec_labels.push_back(truth);
          spec_cm.add(sr.epochs[i].verdict == detectors::SpectralVerdict::artifact, truth);
        }
      }
    }
  }

  const auto roc = eval::roc_auc(scores, labels);
  nlohmann::ordered_json j;
  j["model"] = model;
  j["recordings"] = std::move(recordings);
  j["epochs"] = scores.size();
  j["artifact_epochs"] = std::count(labels.begin(), labels.end(), 1);
  j["auc"] = roc.auc;
  j["exact_auc"] = roc.exact_auc;
  j["best"] = eval::to_json(roc.best);
  j["operating_threshold"] = threshold;
  j["confusion"] = {{"at_operating_threshold", eval::to_json(at_operating)},
                    {"at_best_threshold", eval::to_json(eval::confusion_at(scores, labels, roc.best.threshold))}};
  auto pts = nlohmann::ordered_json::array();
  for (const auto& p : roc.points) pts.push_back(eval::to_json(p));
  j["roc_points"] = std::move(pts);

  std::vector<eval::SvgSeries> roc_series{{model, {}, {}}};
  for (const auto& p : roc.points) {
    roc_series[0].x.push_back(1 - p.sp);
    roc_series[0].y.push_back(p.se);
  }

  std::optional<eval::LocalizationSweep> sweep;
  if (!loc_cases.empty()) {
    try {
      sweep = eval::sweep_localization_threshold(loc_cases);
    } catch (const std::invalid_argument&) {
    }
  }
  if (sweep) {
    nlohmann::ordered_json l;
    l["epochs"] = loc_cases.size();
    l["windows"] = loc_cases.size() * signal::kWindowsPerEpoch;
    l["auc"] = sweep->auc;
    l["best"] = eval::to_json(sweep->best);
    const auto idx = static_cast<std::size_t>(std::lround(sweep->best.threshold * 100));
    l["confusion_at_best"] = eval::to_json(sweep->matrices[idx]);
    auto lp = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < sweep->points.size(); ++i) {
      auto p = eval::to_json(sweep->points[i]);
      p["fp"] = sweep->matrices[i].fp;
      lp.push_back(std::move(p));
    }
    l["points"] = std::move(lp);
    j["localization"] = std::move(l);
  } else {
    j["localization"] = nullptr;
  }

  nlohmann::ordered_json baselines = nlohmann::ordered_json::object();
  if (!std_scores.empty() && std::count(std_labels.begin(), std_labels.end(), 1) > 0 &&
      std::count(std_labels.begin(), std_labels.end(), 0) > 0) {
    const auto sw = detectors::sweep_std_threshold(std_scores, std_labels);
    baselines["std"] = {{"exact_auc", eval::exact_auc(std_scores, std_labels)},
                        {"best", {{"threshold", sw.best.threshold}, {"se", sw.best.se}, {"sp", sw.best.sp}}}};
    eval::SvgSeries s{"std z-score", {}, {}};
    for (auto it = sw.points.rbegin(); it != sw.points.rend(); ++it) {
      s.x.push_back(1 - it->sp);
      s.y.push_back(it->se);
    }
    roc_series.push_back(std::move(s));
  }
  if (!spec_scores.empty() && std::count(spec_labels.begin(), spec_labels.end(), 1) > 0 &&
      std::count(spec_labels.begin(), spec_labels.end(), 0) > 0) {
    const auto ss = eval::sensitivity_specificity(spec_cm);
    baselines["spectral"] = {{"exact_auc", eval::exact_auc(spec_scores, spec_labels)},
                             {"se", ss.se},
                             {"sp", ss.sp},
                             {"confusion", eval::to_json(spec_cm)},
                             {"scored_epochs", spec_scores.size()}};
  }
  j["baselines"] = std::move(baselines);

  if (opt.plots_dir) {
    fs::create_directories(*opt.plots_dir);
    write_file_atomic(*opt.plots_dir / "roc.svg", eval::roc_svg("Epoch-level ROC", roc_series));
    if (sweep) {
      std::vector<eval::SvgSeries> ls{{"localization", {}, {}}};
      for (const auto& p : sweep->points) {
        ls[0].x.push_back(1 - p.sp);
        ls[0].y.push_back(p.se);
      }
      write_file_atomic(*opt.plots_dir / "localization_roc.svg", eval::roc_svg("Window-level localization ROC", ls));
      const double t = sweep->best.threshold;
      for (const auto& [epoch, map] : figures) {
        const auto iv = eval::localize(map, t);
        write_file_atomic(*opt.plots_dir / ("attention_" + std::to_string(epoch.epoch_index) + "_" +
                                            std::to_string(&epoch - &figures.front().first) + ".svg"),
                          eval::attention_svg(epoch.values, map, iv, window_truth(epoch), t));
      }
    }
  }
  return j;
}

}  // namespace eegart::app
