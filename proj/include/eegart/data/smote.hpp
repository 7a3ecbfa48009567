#pragma once

#include <cstdint>
#include <vector>

namespace eegart::data {

struct SmoteSample {
  std::vector<double> values;
  std::size_t base = 0;      // index of x in the minority set
  std::size_t neighbor = 0;  // index of the chosen nearest neighbour
  double lambda = 0.0;
};

// Indices of each point's k nearest other points (Euclidean), nearest first,
// ties broken by index.
std::vector<std::vector<std::size_t>> nearest_neighbors(const std::vector<std::vector<double>>& points,
                                                        std::size_t k);

// target_count synthetic points s = x + lambda * (nn - x): x drawn uniformly
// from the minority set, nn uniformly from x's k nearest minority neighbours,
// lambda ~ U[0, 1).
std::vector<SmoteSample> smote_oversample(const std::vector<std::vector<double>>& minority,
                                          std::size_t k, std::size_t target_count,
                                          std::uint64_t seed);

}  // namespace eegart::data
