#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "eegart/attention/cbam.hpp"
#include "eegart/signal/recording.hpp"
#include "json.hpp"

namespace eegart::eval {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  void add(bool predicted, bool actual);
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  bool operator==(const ConfusionMatrix&) const = default;
};

struct SeSp {
  double se = 0.0, sp = 0.0;
  double gmean() const;
};

// se = TP / (TP + FN), sp = TN / (TN + FP). Throws std::invalid_argument
// when either class is empty.
SeSp sensitivity_specificity(const ConfusionMatrix& cm);

// Positive prediction iff score >= threshold.
ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const int> labels,
                             double threshold);

struct RocPoint {
  double threshold = 0.0;
  double se = 0.0, sp = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // ascending threshold
  double auc = 0.0;              // trapezoid over (1 - sp, se)
  double exact_auc = 0.0;        // rank statistic, ties count one half
  RocPoint best;                 // max sqrt(se * sp), lowest threshold on ties
};

// Thresholds first/denom, (first+1)/denom, ..., last/denom.
std::vector<double> threshold_grid(int first, int last, int denom);

// Trapezoid AUC over points ordered by threshold, anchored at (0,0) and (1,1).
double trapezoid_auc(std::span<const RocPoint> points);
RocPoint best_gmean(std::span<const RocPoint> points);
double exact_auc(std::span<const double> scores, std::span<const int> labels);

// Sweep 0, 0.01, ..., 1. Throws when labels hold a single class.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

// ---- localization ----

struct Interval {
  double start_s = 0.0, end_s = 0.0;  // epoch-local, [start, end)
  double duration() const { return end_s - start_s; }
  bool operator==(const Interval&) const = default;
};

// Maximal runs of steps with value > threshold, as [i * dt, (j + 1) * dt).
// threshold <= 0 selects the whole non-excluded region.
std::vector<Interval> localize(const attention::AttentionMap& map, double threshold);

enum class Verdict { tp, fp, tn, fn };
std::string_view to_string(Verdict v);

// Per-window verdicts for one epoch. An artifact window is hit when some
// interval overlaps it by more than half a window, or has more than half of
// its own duration inside it; a clean window counts as a false positive only
// under the first rule. Throws for intervals outside [0, 20).
std::array<Verdict, signal::kWindowsPerEpoch> score_windows(
    std::span<const Interval> predicted, const std::array<bool, signal::kWindowsPerEpoch>& artifact);
ConfusionMatrix score_localization(std::span<const Interval> predicted,
                                   const std::array<bool, signal::kWindowsPerEpoch>& artifact);

struct LocalizationCase {
  attention::AttentionMap map;
  std::array<bool, signal::kWindowsPerEpoch> artifact{};
};

struct LocalizationSweep {
  std::vector<RocPoint> points;          // thresholds 0, 0.01, ..., 1
  std::vector<ConfusionMatrix> matrices; // window counts per threshold
  RocPoint best;
  double auc = 0.0;
};

// Cases should be the epochs predicted as artifact. Throws when the windows
// hold a single class.
LocalizationSweep sweep_localization_threshold(std::span<const LocalizationCase> cases);

// ---- reports ----

nlohmann::ordered_json to_json(const ConfusionMatrix& cm);
nlohmann::ordered_json to_json(const RocPoint& p);
nlohmann::ordered_json to_json(const RocCurve& roc);

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};
// Line plot with unit axes, one polyline per series; deterministic text.
std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, std::span<const SvgSeries> series,
                          double x_max = 1.0, double y_max = 1.0);
std::string roc_svg(const std::string& title, std::span<const SvgSeries> curves);
// Epoch trace with truth windows, attention map and above-threshold spans.
std::string attention_svg(std::span<const double> epoch, const attention::AttentionMap& map,
                          std::span<const Interval> predicted,
                          const std::array<bool, signal::kWindowsPerEpoch>& artifact,
                          double threshold);

}  // namespace eegart::eval
