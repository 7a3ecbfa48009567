#include "eegart/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "eegart/util/rng.hpp"

namespace eegart::data {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "train";
}

const std::vector<std::string>& SubjectSplit::operator[](Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::validation: return validation;
    case Split::test: return test;
  }
  return train;
}

SubjectSplit split_by_subject(const std::vector<std::string>& subjects, SplitFractions f,
                              std::optional<std::uint64_t> shuffle_seed) {
  const std::size_t n = subjects.size();
  if (n < 3) throw std::invalid_argument("split_by_subject: need at least 3 subjects, got " + std::to_string(n));
  if (std::set<std::string>(subjects.begin(), subjects.end()).size() != n) {
    throw std::invalid_argument("split_by_subject: duplicate subject ids");
  }
  if (f.train < 0 || f.validation < 0 || f.test < 0 ||
      std::abs(f.train + f.validation + f.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split_by_subject: fractions must be non-negative and sum to 1");
  }
  auto order = subjects;
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    rng.shuffle(std::span<std::string>(order));
  }
  const auto count = [&](double frac) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frac * static_cast<double>(n))));
  };
  std::size_t n_train = count(f.train), n_val = count(f.validation);
  // Keep at least one test subject; take it from the larger of the other two.
  while (n_train + n_val >= n) {
    if (n_train >= n_val && n_train > 1) --n_train;
    else --n_val;
  }
  SubjectSplit out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                        order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return out;
}

std::size_t LabeledSet::artifact_count() const {
  return static_cast<std::size_t>(std::count_if(epochs.begin(), epochs.end(),
                                                [](const auto& e) { return e.label == signal::Label::artifact; }));
}

std::size_t LabeledSet::clean_count() const {
  return static_cast<std::size_t>(std::count_if(epochs.begin(), epochs.end(),
                                                [](const auto& e) { return e.label == signal::Label::clean; }));
}

double LabeledSet::artifact_fraction() const {
  const std::size_t labeled = artifact_count() + clean_count();
  return labeled ? static_cast<double>(artifact_count()) / static_cast<double>(labeled) : 0.0;
}

std::vector<LabeledSet> assemble_sets(const std::vector<SubjectEpochs>& subjects, const SubjectSplit& split) {
  std::vector<LabeledSet> sets(3);
  for (int s = 0; s < 3; ++s) sets[s].split = static_cast<Split>(s);
  for (const auto& subj : subjects) {
    int which = -1;
    for (int s = 0; s < 3; ++s) {
      const auto& ids = split[static_cast<Split>(s)];
      if (std::find(ids.begin(), ids.end(), subj.subject_id) != ids.end()) which = s;
    }
    if (which < 0) throw std::invalid_argument("assemble_sets: subject " + subj.subject_id + " not in any split");
    for (const auto& ep : subj.epochs) {
      sets[which].epochs.push_back(ep);
      sets[which].subject_ids.push_back(subj.subject_id);
    }
  }
  return sets;
}

}  // namespace eegart::data
