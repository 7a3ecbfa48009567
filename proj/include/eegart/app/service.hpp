#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "eegart/app/pipeline.hpp"
#include "json.hpp"

namespace eegart::app {

struct AnnotationRecord {
  std::string recording_id;
  std::size_t epoch_index = 0;
  std::size_t window_index = 0;
  std::string source;   // "model" or "rater"
  std::string verdict;  // "artifact" or "clean"
  double threshold_at_decision = 0.0;
  std::string timestamp;  // ISO-8601 UTC
};

nlohmann::ordered_json to_json(const AnnotationRecord& r);
// Throws InputError naming the offending field.
AnnotationRecord annotation_from_json(const nlohmann::json& j);

// Append-only JSON-lines store. Every append rewrites the file through
// write_file_atomic, so readers see either the old or the new file.
class AnnotationStore {
 public:
  explicit AnnotationStore(fs::path file);

  // False when (recording, epoch, window, source) is already present.
  bool append(const AnnotationRecord& r);
  std::vector<AnnotationRecord> for_recording(const std::string& recording_id) const;
  std::size_t size() const;

 private:
  using Key = std::tuple<std::string, std::size_t, std::size_t, std::string>;
  fs::path file_;
  mutable std::mutex mu_;
  std::string contents_;
  std::vector<AnnotationRecord> records_;
  std::set<Key> keys_;
};

// Min/max envelope: at most `max_points` samples, each bin contributing its
// minimum and maximum in time order. Inputs that fit are returned unchanged.
struct TracePoint {
  std::size_t index;
  double value;
};
std::vector<TracePoint> decimate_envelope(std::span<const double> values, std::size_t max_points);

// Windows credited to the intervals by the same overlap rules used for scoring.
std::array<bool, signal::kWindowsPerEpoch> flagged_windows(std::span<const eval::Interval> intervals);

struct Response {
  int status = 200;
  nlohmann::ordered_json body;
};

// The review API over a data directory holding recordings, labels, detection
// reports and their attention maps. Recordings and reports are read once at
// construction; only the annotation store changes afterwards.
class ReviewService {
 public:
  using Clock = std::function<std::string()>;

  explicit ReviewService(const fs::path& data_dir, Clock clock = {});

  Response handle(const std::string& method, const std::string& path,
                  const std::map<std::string, std::string>& query, const std::string& body);

  std::size_t max_trace_points = 2000;

 private:
  struct Entry {
    SubjectData subject;
    std::vector<ReportRow> report;
    std::map<std::size_t, attention::AttentionMap> maps;
  };

  Response recordings() const;
  Response epoch(const std::string& id, const std::string& idx, const std::map<std::string, std::string>& query) const;
  Response report(const std::string& id) const;
  Response post_annotation(const std::string& body);
  Response annotations(const std::string& id) const;
  const Entry* find(const std::string& id) const;

  std::map<std::string, Entry> entries_;
  std::unique_ptr<AnnotationStore> store_;
  Clock clock_;
};

std::string utc_timestamp();

// Blocking HTTP front end. listen() returns false when the port cannot be bound.
class HttpServer {
 public:
  explicit HttpServer(ReviewService& service);
  ~HttpServer();

  // Binds (port 0 picks a free port) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after a successful bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace eegart::app
