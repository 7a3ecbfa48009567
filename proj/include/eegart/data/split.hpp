#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eegart/signal/recording.hpp"

namespace eegart::data {

enum class Split { train, validation, test };
std::string_view to_string(Split s);

struct SplitFractions {
  double train = 0.58;
  double validation = 0.17;
  double test = 0.25;
};

struct SubjectSplit {
  std::vector<std::string> train, validation, test;
  const std::vector<std::string>& operator[](Split s) const;
};

// Subject-disjoint split: round(fraction * N) subjects for train and
// validation (at least one each), the rest for test (at least one). Subjects
// keep their input order unless a shuffle seed is given.
SubjectSplit split_by_subject(const std::vector<std::string>& subjects, SplitFractions fractions,
                              std::optional<std::uint64_t> shuffle_seed = std::nullopt);

struct LabeledSet {
  Split split = Split::train;
  std::vector<signal::Epoch> epochs;
  std::vector<std::string> subject_ids;  // per epoch

  std::size_t artifact_count() const;
  std::size_t clean_count() const;
  double artifact_fraction() const;  // over labeled epochs
};

struct SubjectEpochs {
  std::string subject_id;
  std::vector<signal::Epoch> epochs;
};

// Groups epochs into the three sets according to `split`.
std::vector<LabeledSet> assemble_sets(const std::vector<SubjectEpochs>& subjects,
                                      const SubjectSplit& split);

}  // namespace eegart::data
