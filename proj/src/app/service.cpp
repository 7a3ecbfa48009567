#include "eegart/app/service.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <sstream>

#include "eegart/util/binary_io.hpp"

namespace eegart::app {

namespace {

Response error(int status, const std::string& message) {
  return {status, {{"error", message}}};
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

std::optional<std::size_t> parse_index(const std::string& s) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

nlohmann::ordered_json row_json(const ReportRow& r) {
  nlohmann::ordered_json j;
  j["epoch_index"] = r.epoch_index;
  j["start_s"] = r.start_s;
  j["probability"] = r.probability;
  j["artifact"] = r.artifact;
  j["degenerate"] = r.degenerate;
  return j;
}

const std::set<std::string> kSources{"model", "rater"};
const std::set<std::string> kVerdicts{"artifact", "clean"};

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json to_json(const AnnotationRecord& r) {
  nlohmann::ordered_json j;
  j["recording_id"] = r.recording_id;
  j["epoch_index"] = r.epoch_index;
  j["window_index"] = r.window_index;
  j["source"] = r.source;
  j["verdict"] = r.verdict;
  j["threshold_at_decision"] = r.threshold_at_decision;
  j["timestamp"] = r.timestamp;
  return j;
}

AnnotationRecord annotation_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("annotation must be a JSON object");
  auto field = [&](const char* name) -> const nlohmann::json& {
    if (!j.contains(name)) throw InputError(std::string("missing field: ") + name);
    return j.at(name);
  };
  AnnotationRecord r;
  const auto& rec = field("recording_id");
  if (!rec.is_string() || rec.get<std::string>().empty()) throw InputError("recording_id must be a non-empty string");
  r.recording_id = rec.get<std::string>();
  for (auto [name, target] : {std::pair{"epoch_index", &r.epoch_index}, std::pair{"window_index", &r.window_index}}) {
    const auto& v = field(name);
    if (!v.is_number_unsigned()) throw InputError(std::string(name) + " must be a non-negative integer");
    *target = v.get<std::size_t>();
  }
  if (r.window_index >= signal::kWindowsPerEpoch) throw InputError("window_index must be in [0, 5)");
  const auto& src = field("source");
  if (!src.is_string() || !kSources.count(src.get<std::string>())) throw InputError("source must be model or rater");
  r.source = src.get<std::string>();
  const auto& ver = field("verdict");
  if (!ver.is_string() || !kVerdicts.count(ver.get<std::string>()))
    throw InputError("verdict must be artifact or clean");
  r.verdict = ver.get<std::string>();
  const auto& thr = field("threshold_at_decision");
  if (!thr.is_number() || !(thr.get<double>() >= 0.0 && thr.get<double>() <= 1.0))
    throw InputError("threshold_at_decision must be a number in [0, 1]");
  r.threshold_at_decision = thr.get<double>();
  if (j.contains("timestamp")) {
    if (!j["timestamp"].is_string()) throw InputError("timestamp must be an ISO-8601 string");
    r.timestamp = j["timestamp"].get<std::string>();
  }
  return r;
}

AnnotationStore::AnnotationStore(fs::path file) : file_(std::move(file)) {
  if (!fs::exists(file_)) return;
  contents_ = read_file_text(file_);
  std::istringstream in(contents_);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    try {
      auto r = annotation_from_json(nlohmann::json::parse(line));
      keys_.emplace(r.recording_id, r.epoch_index, r.window_index, r.source);
      records_.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw FormatError(file_.string() + ": bad annotation line: " + e.what());
    }
  }
  if (!contents_.empty() && contents_.back() != '\n') contents_.push_back('\n');
}

bool AnnotationStore::append(const AnnotationRecord& r) {
  std::lock_guard lock(mu_);
  Key key{r.recording_id, r.epoch_index, r.window_index, r.source};
  if (keys_.count(key)) return false;
  std::string next = contents_ + to_json(r).dump() + "\n";
  write_file_atomic(file_, next);
  contents_ = std::move(next);
  keys_.insert(std::move(key));
  records_.push_back(r);
  return true;
}

std::vector<AnnotationRecord> AnnotationStore::for_recording(const std::string& recording_id) const {
  std::lock_guard lock(mu_);
  std::vector<AnnotationRecord> out;
  for (const auto& r : records_)
    if (r.recording_id == recording_id) out.push_back(r);
  return out;
}

std::size_t AnnotationStore::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::vector<TracePoint> decimate_envelope(std::span<const double> values, std::size_t max_points) {
  if (max_points < 2) throw std::invalid_argument("decimate_envelope: max_points must be at least 2");
  std::vector<TracePoint> out;
  if (values.size() <= max_points) {
    for (std::size_t i = 0; i < values.size(); ++i) out.push_back({i, values[i]});
    return out;
  }
  const std::size_t bins = max_points / 2;
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = b * values.size() / bins, hi = (b + 1) * values.size() / bins;
    std::size_t mn = lo, mx = lo;
    for (std::size_t i = lo; i < hi; ++i) {
      if (values[i] < values[mn]) mn = i;
      if (values[i] > values[mx]) mx = i;
    }
    const std::size_t first = std::min(mn, mx), second = std::max(mn, mx);
    out.push_back({first, values[first]});
    out.push_back({second, values[second]});
  }
  return out;
}

std::array<bool, signal::kWindowsPerEpoch> flagged_windows(std::span<const eval::Interval> intervals) {
  std::array<bool, signal::kWindowsPerEpoch> all{};
  all.fill(true);
  const auto v = eval::score_windows(intervals, all);
  std::array<bool, signal::kWindowsPerEpoch> out{};
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = v[k] == eval::Verdict::tp;
  return out;
}

ReviewService::ReviewService(const fs::path& data_dir, Clock clock)
    : clock_(clock ? std::move(clock) : Clock(utc_timestamp)) {
  for (const auto& file : list_recordings(data_dir)) {
    Entry e;
    e.subject = load_subject(file, false);
    entries_.emplace(e.subject.id, std::move(e));
  }
  std::vector<fs::path> dirs{data_dir};
  for (const auto& d : fs::directory_iterator(data_dir))
    if (d.is_directory()) dirs.push_back(d.path());
  std::vector<fs::path> reports;
  for (const auto& dir : dirs)
    for (const auto& f : fs::directory_iterator(dir))
      if (f.is_regular_file() && is_report_file(f.path())) reports.push_back(f.path());
  std::sort(reports.begin(), reports.end());
  for (const auto& rp : reports) {
    auto rows = read_report(rp);
    if (rows.empty()) continue;
    const auto it = entries_.find(rows.front().recording_id);
    if (it == entries_.end()) continue;
    it->second.report = std::move(rows);
    it->second.maps.clear();
    const fs::path mp = maps_path_for(rp);
    if (fs::exists(mp))
      for (auto& [rid, m] : read_maps(mp))
        if (rid == it->first) it->second.maps[m.epoch_index] = std::move(m);
  }
  store_ = std::make_unique<AnnotationStore>(data_dir / "annotations.jsonl");
}

const ReviewService::Entry* ReviewService::find(const std::string& id) const {
  const auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

Response ReviewService::handle(const std::string& method, const std::string& path,
                               const std::map<std::string, std::string>& query, const std::string& body) {
  const auto parts = split_path(path);
  try {
    if (parts.size() == 1 && parts[0] == "recordings") {
      if (method != "GET") return error(405, "method not allowed");
      return recordings();
    }
    if (parts.size() == 3 && parts[0] == "epochs") {
      if (method != "GET") return error(405, "method not allowed");
      return epoch(parts[1], parts[2], query);
    }
    if (parts.size() == 2 && parts[0] == "report") {
      if (method != "GET") return error(405, "method not allowed");
      return report(parts[1]);
    }
    if (parts.size() == 1 && parts[0] == "annotations") {
      if (method != "POST") return error(405, "method not allowed");
      return post_annotation(body);
    }
    if (parts.size() == 2 && parts[0] == "annotations") {
      if (method != "GET") return error(405, "method not allowed");
      return annotations(parts[1]);
    }
  } catch (const InputError& e) {
    return error(400, e.what());
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
  return error(404, "no such endpoint: " + path);
}

Response ReviewService::recordings() const {
  auto list = nlohmann::ordered_json::array();
  for (const auto& [id, e] : entries_) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["epochs"] = e.subject.epochs.size();
    j["labeled"] = std::any_of(e.subject.epochs.begin(), e.subject.epochs.end(),
                               [](const signal::Epoch& x) { return x.label != signal::Label::unlabeled; });
    j["has_report"] = !e.report.empty();
    j["has_maps"] = !e.maps.empty();
    if (!e.report.empty()) {
      j["model"] = e.report.front().model;
      j["threshold"] = e.report.front().threshold;
      if (e.report.front().localization_threshold)
        j["localization_threshold"] = *e.report.front().localization_threshold;
      j["flagged_epochs"] = std::count_if(e.report.begin(), e.report.end(), [](const ReportRow& r) { return r.artifact; });
    }
    list.push_back(std::move(j));
  }
  return {200, {{"recordings", std::move(list)}}};
}

Response ReviewService::epoch(const std::string& id, const std::string& idx_text,
                              const std::map<std::string, std::string>& query) const {
  const Entry* e = find(id);
  if (!e) return error(404, "unknown recording: " + id);
  const auto idx = parse_index(idx_text);
  if (!idx) return error(400, "epoch index must be a non-negative integer");
  if (*idx >= e->subject.epochs.size()) return error(404, "epoch " + idx_text + " out of range");
  const signal::Epoch& ep = e->subject.epochs[*idx];

  std::optional<double> threshold;
  if (!e->report.empty() && e->report.front().localization_threshold)
    threshold = e->report.front().localization_threshold;
  if (const auto q = query.find("threshold"); q != query.end()) {
    double t = 0.0;
    const auto [p, ec] = std::from_chars(q->second.data(), q->second.data() + q->second.size(), t);
    if (ec != std::errc() || p != q->second.data() + q->second.size() || !(t >= 0.0 && t <= 1.0))
      return error(400, "threshold must be a number in [0, 1]");
    threshold = t;
  }

  nlohmann::ordered_json j;
  j["recording_id"] = id;
  j["epoch_index"] = ep.epoch_index;
  j["start_s"] = ep.start_s;
  j["rate_hz"] = signal::kModelRateHz;
  j["degenerate"] = ep.degenerate;
  auto trace = nlohmann::ordered_json::array();
  for (const auto& p : decimate_envelope(ep.values, max_trace_points))
    trace.push_back({static_cast<double>(p.index) / signal::kModelRateHz, p.value});
  j["trace"] = std::move(trace);  // [t_s, value] pairs, epoch-local time
  j["label"] = to_string(ep.label);
  auto wl = nlohmann::ordered_json::array();
  for (auto l : ep.window_labels) wl.push_back(to_string(l));
  j["window_labels"] = std::move(wl);

  const auto row = std::find_if(e->report.begin(), e->report.end(),
                                [&](const ReportRow& r) { return r.epoch_index == ep.epoch_index; });
  j["prediction"] = row == e->report.end() ? nlohmann::ordered_json(nullptr) : row_json(*row);

  const auto m = e->maps.find(ep.epoch_index);
  if (m == e->maps.end()) {
    j["attention"] = nullptr;
    j["threshold"] = threshold ? nlohmann::ordered_json(*threshold) : nlohmann::ordered_json(nullptr);
    j["intervals"] = nlohmann::ordered_json::array();
    j["flagged_windows"] = nlohmann::ordered_json::array();
  } else {
    const double t = threshold.value_or(0.5);
    j["attention"] = attention::to_json(m->second);
    j["threshold"] = t;
    const auto iv = eval::localize(m->second, t);
    auto ivj = nlohmann::ordered_json::array();
    for (const auto& r : iv) ivj.push_back({r.start_s, r.end_s});
    j["intervals"] = std::move(ivj);
    j["flagged_windows"] = flagged_windows(iv);
  }
  auto ann = nlohmann::ordered_json::array();
  for (const auto& r : store_->for_recording(id))
    if (r.epoch_index == ep.epoch_index) ann.push_back(to_json(r));
  j["annotations"] = std::move(ann);
  return {200, std::move(j)};
}

Response ReviewService::report(const std::string& id) const {
  const Entry* e = find(id);
  if (!e) return error(404, "unknown recording: " + id);
  if (e->report.empty()) return error(404, "no detection report for " + id);
  nlohmann::ordered_json j;
  j["recording_id"] = id;
  j["model"] = e->report.front().model;
  j["threshold"] = e->report.front().threshold;
  if (e->report.front().localization_threshold)
    j["localization_threshold"] = *e->report.front().localization_threshold;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : e->report) rows.push_back(row_json(r));
  j["epochs"] = std::move(rows);
  return {200, std::move(j)};
}

Response ReviewService::post_annotation(const std::string& body) {
  const auto parsed = nlohmann::json::parse(body, nullptr, false);
  if (parsed.is_discarded()) return error(400, "request body is not valid JSON");
  AnnotationRecord r = annotation_from_json(parsed);
  const Entry* e = find(r.recording_id);
  if (!e) return error(404, "unknown recording: " + r.recording_id);
  if (r.epoch_index >= e->subject.epochs.size())
    return error(404, "epoch " + std::to_string(r.epoch_index) + " out of range");
  if (r.timestamp.empty()) r.timestamp = clock_();
  if (!store_->append(r)) return error(409, "annotation already recorded for this window and source");
  return {201, to_json(r)};
}

Response ReviewService::annotations(const std::string& id) const {
  if (!find(id)) return error(404, "unknown recording: " + id);
  auto list = nlohmann::ordered_json::array();
  for (const auto& r : store_->for_recording(id)) list.push_back(to_json(r));
  return {200, {{"recording_id", id}, {"annotations", std::move(list)}}};
}

}  // namespace eegart::app
