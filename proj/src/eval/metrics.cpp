#include "eegart/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace eegart::eval {

namespace {

constexpr double kWindow = signal::kWindowSeconds;
constexpr double kEpoch = signal::kEpochSeconds;

void check_sizes(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("metrics: scores/labels size mismatch");
}

double overlap(const Interval& a, double lo, double hi) {
  return std::max(0.0, std::min(a.end_s, hi) - std::max(a.start_s, lo));
}

}  // namespace

void ConfusionMatrix::add(bool predicted, bool actual) {
  if (predicted) {
    ++(actual ? tp : fp);
  } else {
    ++(actual ? fn : tn);
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

double SeSp::gmean() const { return std::sqrt(se * sp); }

SeSp sensitivity_specificity(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fn == 0) throw std::invalid_argument("sensitivity undefined: no positive units");
  if (cm.tn + cm.fp == 0) throw std::invalid_argument("specificity undefined: no negative units");
  return {static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn),
          static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp)};
}

ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const int> labels,
                             double threshold) {
  check_sizes(scores, labels);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) cm.add(scores[i] >= threshold, labels[i] != 0);
  return cm;
}

std::vector<double> threshold_grid(int first, int last, int denom) {
  if (denom <= 0 || last < first) throw std::invalid_argument("threshold_grid: empty grid");
  std::vector<double> g;
  for (int i = first; i <= last; ++i) g.push_back(static_cast<double>(i) / denom);
  return g;
}

double trapezoid_auc(std::span<const RocPoint> points) {
  std::vector<std::pair<double, double>> xy{{0.0, 0.0}, {1.0, 1.0}};
  for (const auto& p : points) xy.emplace_back(1.0 - p.sp, p.se);
  std::sort(xy.begin(), xy.end());
  double auc = 0.0;
  for (std::size_t i = 1; i < xy.size(); ++i) {
    auc += (xy[i].first - xy[i - 1].first) * (xy[i].second + xy[i - 1].second) / 2.0;
  }
  return auc;
}

RocPoint best_gmean(std::span<const RocPoint> points) {
  if (points.empty()) throw std::invalid_argument("best_gmean: no points");
  RocPoint best = points.front();
  double best_g = std::sqrt(best.se * best.sp);
  for (const auto& p : points) {
    const double g = std::sqrt(p.se * p.sp);
    if (g > best_g || (g == best_g && p.threshold < best.threshold)) {
      best = p;
      best_g = g;
    }
  }
  return best;
}

double exact_auc(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores, labels);
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  // Mann-Whitney U with mid-ranks for ties.
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[idx[k]] != 0) {
        rank_sum += mid;
        ++pos;
      }
    i = j;
  }
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("exact_auc: labels hold a single class");
  const double np = static_cast<double>(pos);
  return (rank_sum - np * (np + 1) / 2.0) / (np * static_cast<double>(neg));
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores, labels);
  RocCurve roc;
  roc.exact_auc = exact_auc(scores, labels);
  for (double t : threshold_grid(0, 100, 100)) {
    const SeSp s = sensitivity_specificity(confusion_at(scores, labels, t));
    roc.points.push_back({t, s.se, s.sp});
  }
  roc.auc = trapezoid_auc(roc.points);
  roc.best = best_gmean(roc.points);
  return roc;
}

std::vector<Interval> localize(const attention::AttentionMap& map, double threshold) {
  const std::size_t L = map.values.size();
  const double dt = map.time_scale_s_per_step;
  std::vector<Interval> out;
  if (L == 0) return out;
  const std::size_t lo = map.edge_steps, hi = L - map.edge_steps;
  if (threshold <= 0.0) {
    if (lo < hi) out.push_back({static_cast<double>(lo) * dt, static_cast<double>(hi) * dt});
    return out;
  }
  std::size_t i = lo;
  while (i < hi) {
    if (!(map.values[i] > threshold)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < hi && map.values[j] > threshold) ++j;
    out.push_back({static_cast<double>(i) * dt, static_cast<double>(j) * dt});
    i = j;
  }
  return out;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::tp: return "tp";
    case Verdict::fp: return "fp";
    case Verdict::tn: return "tn";
    case Verdict::fn: return "fn";
  }
  return "?";
}

std::array<Verdict, signal::kWindowsPerEpoch> score_windows(
    std::span<const Interval> predicted, const std::array<bool, signal::kWindowsPerEpoch>& artifact) {
  for (const auto& p : predicted) {
    if (!(p.start_s >= 0.0 && p.end_s <= kEpoch && p.start_s < p.end_s)) {
      throw std::invalid_argument("score_localization: interval outside the epoch");
    }
  }
  std::array<Verdict, signal::kWindowsPerEpoch> v{};
  for (std::size_t w = 0; w < signal::kWindowsPerEpoch; ++w) {
    const double lo = static_cast<double>(w) * kWindow, hi = lo + kWindow;
    bool covered = false, inside = false;
    for (const auto& p : predicted) {
      const double ov = overlap(p, lo, hi);
      covered = covered || ov > kWindow / 2;
      inside = inside || ov > p.duration() / 2;
    }
    if (artifact[w]) {
      v[w] = covered || inside ? Verdict::tp : Verdict::fn;
    } else {
      v[w] = covered ? Verdict::fp : Verdict::tn;
    }
  }
  return v;
}

ConfusionMatrix score_localization(std::span<const Interval> predicted,
                                   const std::array<bool, signal::kWindowsPerEpoch>& artifact) {
  ConfusionMatrix cm;
  for (Verdict v : score_windows(predicted, artifact)) {
    switch (v) {
      case Verdict::tp: ++cm.tp; break;
      case Verdict::fp: ++cm.fp; break;
      case Verdict::tn: ++cm.tn; break;
      case Verdict::fn: ++cm.fn; break;
    }
  }
  return cm;
}

LocalizationSweep sweep_localization_threshold(std::span<const LocalizationCase> cases) {
  LocalizationSweep s;
  for (double t : threshold_grid(0, 100, 100)) {
    ConfusionMatrix cm;
    for (const auto& c : cases) {
      const auto iv = localize(c.map, t);
      cm += score_localization(iv, c.artifact);
    }
    const SeSp r = sensitivity_specificity(cm);
    s.points.push_back({t, r.se, r.sp});
    s.matrices.push_back(cm);
  }
  s.best = best_gmean(s.points);
  s.auc = trapezoid_auc(s.points);
  return s;
}

nlohmann::ordered_json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

nlohmann::ordered_json to_json(const RocPoint& p) {
  return {{"threshold", p.threshold}, {"se", p.se}, {"sp", p.sp}};
}

nlohmann::ordered_json to_json(const RocCurve& roc) {
  nlohmann::ordered_json j;
  j["auc"] = roc.auc;
  j["exact_auc"] = roc.exact_auc;
  j["best"] = to_json(roc.best);
  auto pts = nlohmann::ordered_json::array();
  for (const auto& p : roc.points) pts.push_back(to_json(p));
  j["roc_points"] = std::move(pts);
  return j;
}

namespace {

constexpr double kW = 480, kH = 360, kPad = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      default: o += c;
    }
  }
  return o;
}

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, std::span<const SvgSeries> series,
                          double x_max, double y_max) {
  const double pw = kW - 2 * kPad, ph = kH - 2 * kPad;
  auto px = [&](double x) { return kPad + pw * x / x_max; };
  auto py = [&](double y) { return kH - kPad - ph * y / y_max; };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
    << "</text>\n"
    << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n"
    << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << escape(x_label) << "</text>\n"
    << "<text x=\"14\" y=\"" << kH / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
    << kH / 2 << ")\">" << escape(y_label) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_max * i / 4, fy = y_max * i / 4;
    s << "<text x=\"" << fmt(px(fx)) << "\" y=\"" << kH - kPad + 14
      << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt(fx) << "</text>\n"
      << "<text x=\"" << kPad - 4 << "\" y=\"" << fmt(py(fy) + 3)
      << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(fy) << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    const char* color = kColors[k % std::size(kColors)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < sr.x.size() && i < sr.y.size(); ++i) {
      s << (i ? " " : "") << fmt(px(sr.x[i])) << "," << fmt(py(sr.y[i]));
    }
    s << "\"/>\n<text x=\"" << kPad + 8 << "\" y=\"" << kPad + 16 + 14 * static_cast<double>(k)
      << "\" font-size=\"11\" fill=\"" << color << "\">" << escape(sr.label) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string roc_svg(const std::string& title, std::span<const SvgSeries> curves) {
  return line_plot_svg(title, "1 - specificity", "sensitivity", curves);
}

std::string attention_svg(std::span<const double> epoch, const attention::AttentionMap& map,
                          std::span<const Interval> predicted,
                          const std::array<bool, signal::kWindowsPerEpoch>& artifact,
                          double threshold) {
  const double W = 800, H = 300, top = 30, trace_h = 150, map_top = 200, map_h = 80;
  auto tx = [&](double t) { return 20 + (W - 40) * t / kEpoch; };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"20\" y=\"18\" font-size=\"13\">epoch " << map.epoch_index << ", threshold "
    << fmt(threshold) << "</text>\n";
  for (std::size_t w = 0; w < signal::kWindowsPerEpoch; ++w) {
    if (!artifact[w]) continue;
    s << "<rect x=\"" << fmt(tx(w * kWindow)) << "\" y=\"" << top << "\" width=\""
      << fmt(tx(kWindow) - tx(0)) << "\" height=\"" << trace_h
      << "\" fill=\"#fdd\" class=\"truth\"/>\n";
  }
  for (const auto& p : predicted) {
    s << "<rect x=\"" << fmt(tx(p.start_s)) << "\" y=\"" << map_top << "\" width=\""
      << fmt(tx(p.end_s) - tx(p.start_s)) << "\" height=\"" << map_h
      << "\" fill=\"#fc9\" class=\"predicted\"/>\n";
  }
  if (!epoch.empty()) {
    const auto [mn, mx] = std::minmax_element(epoch.begin(), epoch.end());
    const double range = *mx - *mn > 0 ? *mx - *mn : 1.0;
    s << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.6\" points=\"";
    for (std::size_t i = 0; i < epoch.size(); ++i) {
      const double t = kEpoch * static_cast<double>(i) / static_cast<double>(epoch.size());
      s << (i ? " " : "") << fmt(tx(t)) << "," << fmt(top + trace_h - trace_h * (epoch[i] - *mn) / range);
    }
    s << "\"/>\n";
  }
  s << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const double t = (static_cast<double>(i) + 0.5) * map.time_scale_s_per_step;
    s << (i ? " " : "") << fmt(tx(t)) << "," << fmt(map_top + map_h - map_h * map.values[i]);
  }
  s << "\"/>\n<line x1=\"" << tx(0) << "\" x2=\"" << tx(kEpoch) << "\" y1=\""
    << fmt(map_top + map_h - map_h * threshold) << "\" y2=\"" << fmt(map_top + map_h - map_h * threshold)
    << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n</svg>\n";
  return s.str();
}

}  // namespace eegart::eval
