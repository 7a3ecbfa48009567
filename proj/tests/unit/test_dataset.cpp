#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "eegart/data/labels.hpp"
#include "eegart/data/smote.hpp"
#include "eegart/data/split.hpp"
#include "eegart/data/synthetic.hpp"
#include "eegart/signal/dsp.hpp"
#include "eegart/util/binary_io.hpp"
#include "eegart/util/errors.hpp"
#include "eegart/util/rng.hpp"
#include "support/oracles.hpp"

using namespace eegart::data;
using eegart::signal::Label;
namespace fs = std::filesystem;

namespace {
std::array<Label, 5> windows(std::initializer_list<int> artifact_idx) {
  std::array<Label, 5> w;
  w.fill(Label::clean);
  for (int i : artifact_idx) w[static_cast<std::size_t>(i)] = Label::artifact;
  return w;
}
}  // namespace

TEST_CASE("window labels from epoch-local intervals") {
  Epoch ep;
  const std::vector<TruthInterval> a{{5.0, 6.0, "spike"}};
  assign_window_labels(ep, a);
  CHECK(ep.window_labels == windows({1}));
  CHECK(ep.label == Label::artifact);

  assign_window_labels(ep, {});
  CHECK(ep.window_labels == windows({}));
  CHECK(ep.label == Label::clean);

  const std::vector<TruthInterval> b{{3.9, 4.1, "emg_burst"}};
  assign_window_labels(ep, b);
  CHECK(ep.window_labels == windows({0, 1}));

  // Touching a boundary is not an overlap.
  const std::vector<TruthInterval> c{{4.0, 8.0, "spike"}};
  assign_window_labels(ep, c);
  CHECK(ep.window_labels == windows({1}));

  const std::vector<TruthInterval> sweat{{2.0, 15.0, "sweat"}};
  assign_window_labels(ep, sweat);
  CHECK(ep.label == Label::clean);

  const std::vector<TruthInterval> bad{{18.0, 21.0, "spike"}};
  CHECK_THROWS_AS(assign_window_labels(ep, bad), std::invalid_argument);
  const std::vector<TruthInterval> neg{{-1.0, 1.0, "spike"}};
  CHECK_THROWS_AS(assign_window_labels(ep, neg), std::invalid_argument);
}

TEST_CASE("epoch label is the OR of window labels on random cases") {
  eegart::Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    Epoch ep;
    std::vector<TruthInterval> ivs;
    const auto k = rng.index(3);
    for (std::size_t i = 0; i < k; ++i) {
      const double s = rng.uniform(0, 19.5);
      ivs.push_back({s, std::min(20.0, s + rng.uniform(0.01, 3.0)), "spike"});
    }
    assign_window_labels(ep, ivs);
    const bool any = std::any_of(ep.window_labels.begin(), ep.window_labels.end(),
                                 [](Label l) { return l == Label::artifact; });
    CHECK((ep.label == Label::artifact) == any);
    CHECK(any == !ivs.empty());
  }
}

TEST_CASE("label_epochs clips recording-time truth to epochs") {
  std::vector<Epoch> eps(3);
  for (std::size_t i = 0; i < 3; ++i) {
    eps[i].epoch_index = i;
    eps[i].start_s = 20.0 + 20.0 * i;
  }
  const std::vector<TruthInterval> truth{{38.0, 43.0, "motion_step"}};
  label_epochs(eps, truth);
  CHECK(eps[0].window_labels == windows({4}));
  CHECK(eps[1].window_labels == windows({0}));
  CHECK(eps[2].label == Label::clean);
}

TEST_CASE("label, truth and stage files round-trip") {
  const fs::path dir = fs::temp_directory_path() / "eegart_labels_test";
  fs::create_directories(dir);
  std::vector<LabelRecord> recs{{"S01", 0, Label::clean, windows({})},
                                {"S01", 1, Label::artifact, windows({2, 3})}};
  write_label_file(dir / "l.jsonl", recs);
  const auto back = read_label_file(dir / "l.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[1].window_labels == windows({2, 3}));
  CHECK(back[1].label == Label::artifact);

  const std::vector<TruthInterval> truth{{1.5, 2.25, "spike"}, {30.0, 40.0, "sweat"}};
  write_truth_file(dir / "t.json", truth);
  const auto tb = read_truth_file(dir / "t.json");
  REQUIRE(tb.size() == 2);
  CHECK(tb[0].start_s == 1.5);
  CHECK(tb[1].kind == "sweat");

  const std::vector<Stage> st{Stage::W, Stage::N2, Stage::REM};
  write_stage_file(dir / "s.jsonl", st);
  CHECK(read_stage_file(dir / "s.jsonl") == st);

  eegart::write_file_atomic(dir / "bad.jsonl",
                            std::string_view(R"({"recording_id":"x","epoch_index":0,"label":"clean","window_labels":["artifact","clean","clean","clean","clean"]})"
                                             "\n"));
  CHECK_THROWS_AS(read_label_file(dir / "bad.jsonl"), eegart::FormatError);
  fs::remove_all(dir);
}

TEST_CASE("subject split sizes and disjointness") {
  std::vector<std::string> subj;
  for (int i = 0; i < 24; ++i) subj.push_back("S" + std::to_string(i));
  const auto s = split_by_subject(subj, {0.58, 0.17, 0.25});
  CHECK(s.train.size() == 14);
  CHECK(s.validation.size() == 4);
  CHECK(s.test.size() == 6);

  const auto s3 = split_by_subject({"a", "b", "c"}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  CHECK(s3.train.size() == 1);
  CHECK(s3.validation.size() == 1);
  CHECK(s3.test.size() == 1);

  eegart::Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng.index(40);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
    const double a = rng.uniform(0.1, 0.8), b = rng.uniform(0.05, 1 - a - 0.05);
    const SplitFractions f{a, b, 1 - a - b};
    const auto sp = split_by_subject(ids, f, rng.next_u64());
    std::set<std::string> all;
    for (const auto* part : {&sp.train, &sp.validation, &sp.test}) {
      CHECK(!part->empty());
      all.insert(part->begin(), part->end());
    }
    CHECK(all.size() == n);
    CHECK(sp.train.size() + sp.validation.size() + sp.test.size() == n);
    // Within one subject of the target where the minimum-one rule allows.
    if (a * n >= 1.5 && b * n >= 1.5 && f.test * n >= 1.5) {
      CHECK(std::abs(static_cast<double>(sp.train.size()) - a * n) <= 1.0);
      CHECK(std::abs(static_cast<double>(sp.validation.size()) - b * n) <= 1.0);
    }
  }
  CHECK_THROWS_AS(split_by_subject({"a", "b"}, {}), std::invalid_argument);
  CHECK_THROWS_AS(split_by_subject(subj, {0.5, 0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("smote basics") {
  const std::vector<std::vector<double>> same{{1, 2, 3}, {1, 2, 3}};
  for (const auto& s : smote_oversample(same, 1, 10, 3)) CHECK(s.values == same[0]);

  const std::vector<std::vector<double>> two{{0, 0}, {1, 1}};
  const auto out = smote_oversample(two, 1, 50, 9);
  CHECK(out.size() == 50);
  for (const auto& s : out) {
    const auto& x = two[s.base];
    const auto& y = two[s.neighbor];
    CHECK(s.values[0] == doctest::Approx(x[0] + s.lambda * (y[0] - x[0])).epsilon(1e-15));
    CHECK(s.values[0] == s.values[1]);
  }
  // The midpoint example, λ = 0.5 by construction.
  CHECK(two[0][0] + 0.5 * (two[1][0] - two[0][0]) == 0.5);

  CHECK_THROWS_AS(smote_oversample(two, 2, 5, 1), std::invalid_argument);
  CHECK_THROWS_AS(smote_oversample(two, 0, 5, 1), std::invalid_argument);
}

TEST_CASE("smote matches brute-force neighbours and interpolation") {
  eegart::Rng rng(21);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 6 + rng.index(20), dim = 1 + rng.index(30), k = 1 + rng.index(5);
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts)
      for (auto& v : p) v = rng.uniform();
    const auto syn = smote_oversample(pts, k, 40, rng.next_u64());
    std::vector<double> lo(dim, 1e9), hi(dim, -1e9);
    for (const auto& p : pts)
      for (std::size_t t = 0; t < dim; ++t) {
        lo[t] = std::min(lo[t], p[t]);
        hi[t] = std::max(hi[t], p[t]);
      }
    for (const auto& s : syn) {
      const auto nn = oracle::knn(pts, s.base, k);
      CHECK(std::find(nn.begin(), nn.end(), s.neighbor) != nn.end());
      CHECK(s.lambda >= 0.0);
      CHECK(s.lambda < 1.0);
      for (std::size_t t = 0; t < dim; ++t) {
        const double x = pts[s.base][t], y = pts[s.neighbor][t];
        worst = std::max(worst, std::abs(s.values[t] - (x + s.lambda * (y - x))));
        CHECK(s.values[t] >= std::min(x, y));
        CHECK(s.values[t] <= std::max(x, y));
        CHECK(s.values[t] >= lo[t]);
        CHECK(s.values[t] <= hi[t]);
      }
    }
    const auto again = smote_oversample(pts, k, 40, 0);
    CHECK(again.size() == 40);
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("synthetic generator is deterministic and well formed") {
  SyntheticSpec spec;
  spec.seed = 7;
  spec.duration_s = 20 + 20 * 60 + 5;
  spec.artifact_rate = 0.2;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  CHECK(a.recording.samples == b.recording.samples);
  CHECK(a.truth.size() == b.truth.size());
  CHECK(a.stages.size() == 60);
  CHECK(a.recording.samples.size() == static_cast<std::size_t>(spec.duration_s * 250));

  for (std::size_t i = 0; i < a.truth.size(); ++i) {
    const auto& iv = a.truth[i];
    CHECK(iv.start_s < iv.end_s);
    // Each event lies inside one scoring epoch.
    const auto e = static_cast<std::size_t>((iv.start_s - 20.0) / 20.0);
    CHECK(iv.end_s <= 20.0 + 20.0 * (e + 1));
    if (i > 0) CHECK(a.truth[i - 1].end_s <= iv.start_s);
    if (iv.kind == "spike") {
      double peak = 0;
      for (std::size_t s = static_cast<std::size_t>(iv.start_s * 250); s < static_cast<std::size_t>(iv.end_s * 250); ++s)
        peak = std::max(peak, std::abs(a.recording.samples[s]));
      CHECK(peak > 100.0);
    }
  }
  spec.seed = 8;
  CHECK(generate_synthetic(spec).recording.samples != a.recording.samples);

  spec.artifact_rate = 0.5;
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
}

TEST_CASE("synthetic artifact count follows the rate") {
  SyntheticSpec spec;
  spec.seed = 3;
  spec.artifact_rate = 0.0;
  spec.duration_s = 20 + 20 * 100;
  const auto none = generate_synthetic(spec);
  for (const auto& iv : none.truth) CHECK(iv.kind == "sweat");
  auto eps = eegart::signal::preprocess(none.recording);
  label_epochs(eps, none.truth);
  for (const auto& ep : eps) CHECK(ep.label == Label::clean);

  spec.artifact_rate = 0.04;
  spec.duration_s = 20 + 20 * 1000;
  const auto syn = generate_synthetic(spec);
  auto eps2 = eegart::signal::preprocess(syn.recording);
  CHECK(eps2.size() == 1000);
  label_epochs(eps2, syn.truth);
  const auto n_art = std::count_if(eps2.begin(), eps2.end(), [](const Epoch& e) { return e.label == Label::artifact; });
  const auto n_truth = std::count_if(syn.truth.begin(), syn.truth.end(),
                                     [](const TruthInterval& iv) { return is_artifact_kind(iv.kind); });
  CHECK(n_art == n_truth);
  CHECK(n_art >= 30);
  CHECK(n_art <= 50);
}

TEST_CASE("cohort specs") {
  CohortSpec c;
  c.seed = 1;
  c.subjects = 4;
  c.epochs_per_subject = 10;
  const auto specs = cohort_specs(c);
  REQUIRE(specs.size() == 4);
  CHECK(specs[0].id == "S01");
  CHECK(specs[3].id == "S04");
  CHECK(specs[0].epoch_count() == 10);
  CHECK(specs[0].seed != specs[1].seed);
}
