#include <algorithm>
#include <set>

#include "doctest.h"
#include "eegart/app/pipeline.hpp"
#include "eegart/signal/dsp.hpp"
#include "eegart/signal/recording_io.hpp"
#include "eegart/util/binary_io.hpp"
#include "support/app_fixture.hpp"

using namespace eegart;
using namespace eegart::app;
using testsupport::TempDir;
using testsupport::trained_fixture;

TEST_CASE("synthesize_dataset writes a complete, reproducible directory") {
  TempDir a("synth_a"), b("synth_b");
  const auto ids = synthesize_dataset(testsupport::small_cohort(), a.path);
  synthesize_dataset(testsupport::small_cohort(), b.path);
  CHECK(ids == std::vector<std::string>{"S01", "S02", "S03", "S04", "S05"});
  const auto files = list_recordings(a.path);
  REQUIRE(files.size() == 5);
  for (const auto& f : files) {
    const std::string id = recording_id(f);
    CHECK(fs::exists(labels_path(a.path, id)));
    CHECK(fs::exists(truth_path(a.path, id)));
    CHECK(fs::exists(stages_path(a.path, id)));
  }
  for (const auto& entry : fs::directory_iterator(a.path)) {
    const auto other = b.path / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(read_file_bytes(entry.path()) == read_file_bytes(other));
  }
  const auto s = load_subject(files.front(), true);
  CHECK(s.epochs.size() == 40);
  CHECK(s.stages.has_value());
}

TEST_CASE("cohort_from_json rejects unknown fields") {
  CHECK(cohort_from_json(nlohmann::json{{"subjects", 4}}, 3).subjects == 4);
  CHECK_THROWS_AS(cohort_from_json(nlohmann::json{{"subject", 4}}, 3), InputError);
  CHECK_THROWS_AS(cohort_from_json(nlohmann::json::array(), 3), InputError);
}

TEST_CASE("training splits by subject and stores the operating points") {
  const auto& f = trained_fixture();
  std::set<std::string> seen;
  for (const auto* part : {&f.split.train, &f.split.validation, &f.split.test})
    for (const auto& id : *part) CHECK(seen.insert(id).second);
  CHECK(seen.size() == 5);
  const auto m = load_model(f.weights);
  CHECK(m.model->kind() == models::ModelKind::cnn_cbam);
  CHECK(m.threshold == f.threshold);
  CHECK(m.localization_threshold == f.localization_threshold);
  CHECK(m.threshold >= 0.0);
  CHECK(m.threshold <= 1.0);
  CHECK(m.header.at("split").at("test").size() == f.split.test.size());
  CHECK(m.header.at("samples").at("train").at("smote").get<std::size_t>() > 0);
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  TempDir d("train_repro");
  synthesize_dataset(testsupport::small_cohort(), d.path);
  auto opt = testsupport::quick_train_options(models::ModelKind::cnn, 9);
  opt.train.max_epochs = 1;
  opt.train.patience = 1;
  const auto a = nn::encode_weight_file(outcome_weight_file(train_on_dataset(d.path, opt)));
  const auto b = nn::encode_weight_file(outcome_weight_file(train_on_dataset(d.path, opt)));
  CHECK(a == b);
}

TEST_CASE("heuristic model trains with the two-phase scheme") {
  TempDir d("train_heur");
  synthesize_dataset(testsupport::small_cohort(), d.path);
  auto opt = testsupport::quick_train_options(models::ModelKind::heuristic_1dcnn, 2);
  opt.train.max_epochs = 1;
  opt.train.patience = 1;
  const auto out = train_on_dataset(d.path, opt);
  CHECK(out.summary.at("history").contains("features"));
  CHECK(out.summary.at("history").contains("head"));
}

TEST_CASE("too few artifact epochs for oversampling is an input error") {
  TempDir d("train_few");
  auto c = testsupport::small_cohort();
  c.artifact_rate = 0.0;
  synthesize_dataset(c, d.path);
  CHECK_THROWS_AS(train_on_dataset(d.path, testsupport::quick_train_options(models::ModelKind::cnn)), InputError);
}

TEST_CASE("detect produces one row and one map per epoch") {
  const auto& f = trained_fixture();
  const auto model = load_model(f.weights);
  const auto file = list_recordings(f.data).front();
  const auto rec = load_recording(file);
  const auto d = detect(model, rec);
  const auto epochs = signal::preprocess(rec);
  REQUIRE(d.epochs.size() == epochs.size());
  REQUIRE(d.maps.size() == epochs.size());
  for (std::size_t i = 0; i < d.epochs.size(); ++i) {
    CHECK(d.epochs[i].epoch_index == i);
    CHECK(d.epochs[i].artifact == (d.epochs[i].probability >= model.threshold));
    CHECK(d.maps[i].epoch_index == i);
  }
  // Batched capture agrees with the single-epoch map.
  for (std::size_t i : {std::size_t{0}, epochs.size() / 2, epochs.size() - 1}) {
    std::vector<float> x(epochs[i].values.begin(), epochs[i].values.end());
    const auto single = model.model->attention_map(x, i);
    REQUIRE(single.values.size() == d.maps[i].values.size());
    for (std::size_t k = 0; k < single.values.size(); ++k) CHECK(single.values[k] == doctest::Approx(d.maps[i].values[k]).epsilon(1e-5));
  }
  const auto probs = predict_probabilities(*model.model, epochs);
  for (std::size_t i = 0; i < probs.size(); ++i) CHECK(probs[i] == d.epochs[i].probability);
}

TEST_CASE("report and map files round-trip") {
  const auto& f = trained_fixture();
  TempDir out("reports");
  const auto model = load_model(f.weights);
  const auto d = detect(model, load_recording(list_recordings(f.data)[1]));
  const fs::path rp = out.path / "S02.jsonl";
  write_file_atomic(rp, report_jsonl(d));
  write_file_atomic(maps_path_for(rp), maps_jsonl(d));
  CHECK(maps_path_for(rp) == out.path / "S02.maps.jsonl");
  CHECK(is_report_file(rp));
  CHECK_FALSE(is_report_file(maps_path_for(rp)));

  const auto rows = read_report(rp);
  REQUIRE(rows.size() == d.epochs.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].recording_id == "S02");
    CHECK(rows[i].probability == d.epochs[i].probability);
    CHECK(rows[i].artifact == d.epochs[i].artifact);
    CHECK(rows[i].localization_threshold == model.localization_threshold);
  }
  const auto maps = read_maps(maps_path_for(rp));
  REQUIRE(maps.size() == d.maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i) CHECK(maps[i].second.values == d.maps[i].values);

  write_file_atomic(out.path / "bad.jsonl", "{\"recording_id\": 3}\n");
  CHECK_THROWS_AS(read_report(out.path / "bad.jsonl"), FormatError);
}

TEST_CASE("localization lines equal localize() on the stored maps") {
  const auto& f = trained_fixture();
  const auto model = load_model(f.weights);
  const auto d = detect(model, load_recording(list_recordings(f.data)[2]));
  for (double t : {0.0, 0.3, 0.66, 1.0}) {
    const std::string text = localization_jsonl(d, t);
    std::istringstream in(text);
    std::size_t i = 0;
    for (std::string line; std::getline(in, line); ++i) {
      const auto j = nlohmann::json::parse(line);
      const auto expect = eval::localize(d.maps[i], t);
      REQUIRE(j["intervals"].size() == expect.size());
      for (std::size_t k = 0; k < expect.size(); ++k) {
        CHECK(j["intervals"][k][0].get<double>() == expect[k].start_s);
        CHECK(j["intervals"][k][1].get<double>() == expect[k].end_s);
      }
      if (t >= 1.0) CHECK(expect.empty());
    }
    CHECK(i == d.epochs.size());
  }
}

TEST_CASE("models without attention cannot localize") {
  Detection d;
  d.epochs.resize(2);
  d.model_kind = "cnn";
  CHECK_THROWS_AS(localization_jsonl(d, 0.5), InputError);
}

TEST_CASE("empty and too-short recordings are input errors") {
  TempDir d("empty_rec");
  write_file_atomic(d.path / "empty.csv", "t_s,uv\n");
  CHECK_THROWS_AS(load_recording(d.path / "empty.csv"), InputError);
  CHECK_THROWS_AS(load_recording(d.path / "missing.csv"), InputError);

  signal::Recording shortrec;
  shortrec.id = "short";
  shortrec.rate_hz = 128;
  shortrec.samples.assign(128 * 30, 1.0);
  const auto& f = trained_fixture();
  CHECK_THROWS_AS(detect(load_model(f.weights), shortrec), InputError);
}

TEST_CASE("evaluate scores reports against labels and runs the baselines") {
  const auto& f = trained_fixture();
  TempDir out("eval");
  const auto model = load_model(f.weights);
  for (const auto& file : list_recordings(f.data)) {
    const auto d = detect(model, load_recording(file));
    const fs::path rp = out.path / (d.recording_id + ".jsonl");
    write_file_atomic(rp, report_jsonl(d));
    write_file_atomic(maps_path_for(rp), maps_jsonl(d));
  }
  EvalOptions eo;
  eo.reports_dir = out.path;
  eo.labels_dir = f.data;
  eo.plots_dir = out.path / "plots";
  eo.attention_figures = 2;
  const auto j = evaluate(eo);
  CHECK(j["model"] == "cnn_cbam");
  CHECK(j["epochs"].get<std::size_t>() == 200);
  CHECK(j["recordings"].size() == 5);
  const auto cm = j["confusion"]["at_operating_threshold"];
  CHECK(cm["tp"].get<int>() + cm["fp"].get<int>() + cm["tn"].get<int>() + cm["fn"].get<int>() == 200);
  CHECK(j["auc"].get<double>() >= 0.0);
  CHECK(j["auc"].get<double>() <= 1.0);
  CHECK(j["roc_points"].size() == 101);
  CHECK(j["baselines"].contains("std"));
  CHECK(j["baselines"].contains("spectral"));
  CHECK(fs::exists(out.path / "plots" / "roc.svg"));
  // Same inputs, same bytes.
  CHECK(evaluate(eo).dump() == j.dump());

  EvalOptions none;
  none.reports_dir = out.path / "plots";
  none.labels_dir = f.data;
  CHECK_THROWS_AS(evaluate(none), InputError);
}
