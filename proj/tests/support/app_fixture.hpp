#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>

#include "eegart/app/pipeline.hpp"
#include "eegart/nn/weights.hpp"

namespace testsupport {

namespace fs = std::filesystem;

// Fresh per-process directory removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("eegart_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline eegart::data::CohortSpec small_cohort(std::uint64_t seed = 21) {
  eegart::data::CohortSpec c;
  c.seed = seed;
  c.subjects = 5;
  c.epochs_per_subject = 40;
  c.artifact_rate = 0.3;
  return c;
}

inline eegart::app::TrainOptions quick_train_options(eegart::models::ModelKind kind, std::uint64_t seed = 4) {
  eegart::app::TrainOptions opt;
  opt.model.kind = kind;
  opt.model.seed = seed;
  opt.train.seed = seed;
  opt.train.max_epochs = 3;
  opt.train.patience = 2;
  opt.train.batch_size = 32;
  opt.train.adam.lr = 1e-3;
  return opt;
}

// A small cohort plus a briefly trained toy cnn_cbam, built once per binary.
struct TrainedFixture {
  TempDir root{"trained"};
  fs::path data = root.path / "data";
  fs::path weights = root.path / "model.bin";
  double threshold = 0.5;
  double localization_threshold = 0.5;
  eegart::data::SubjectSplit split;

  TrainedFixture() {
    eegart::app::synthesize_dataset(small_cohort(), data);
    const auto outcome =
        eegart::app::train_on_dataset(data, quick_train_options(eegart::models::ModelKind::cnn_cbam));
    threshold = outcome.threshold;
    localization_threshold = outcome.localization_threshold;
    split = outcome.split;
    eegart::nn::write_weight_file(weights, eegart::app::outcome_weight_file(outcome));
  }
};

inline const TrainedFixture& trained_fixture() {
  static const TrainedFixture f;
  return f;
}

}  // namespace testsupport
