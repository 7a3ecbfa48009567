#include "eegart/data/smote.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "eegart/util/rng.hpp"

namespace eegart::data {

std::vector<std::vector<std::size_t>> nearest_neighbors(const std::vector<std::vector<double>>& points,
                                                        std::size_t k) {
  const std::size_t n = points.size();
  if (k == 0 || k >= n) throw std::invalid_argument("nearest_neighbors: need 1 <= k < number of points");
  const std::size_t dim = points[0].size();
  for (const auto& p : points)
    if (p.size() != dim) throw std::invalid_argument("nearest_neighbors: inconsistent dimensions");

  std::vector<double> d2(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0.0;
      const double* a = points[i].data();
      const double* b = points[j].data();
      for (std::size_t t = 0; t < dim; ++t) {
        const double diff = a[t] - b[t];
        acc += diff * diff;
      }
      d2[i * n + j] = d2[j * n + i] = acc;
    }
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) {
    idx.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) idx.push_back(j);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double da = d2[i * n + a], db = d2[i * n + b];
                        return da < db || (da == db && a < b);
                      });
    out[i].assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

std::vector<SmoteSample> smote_oversample(const std::vector<std::vector<double>>& minority, std::size_t k,
                                          std::size_t target_count, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("smote: k must be >= 1");
  if (minority.size() < k + 1) {
    throw std::invalid_argument("smote: minority class has " + std::to_string(minority.size()) +
                                " samples, need at least k + 1 = " + std::to_string(k + 1));
  }
  const auto nn = nearest_neighbors(minority, k);
  Rng rng(seed);
  std::vector<SmoteSample> out;
  out.reserve(target_count);
  for (std::size_t i = 0; i < target_count; ++i) {
    SmoteSample s;
    s.base = rng.index(minority.size());
    s.neighbor = nn[s.base][rng.index(k)];
    s.lambda = rng.uniform();
    const auto& x = minority[s.base];
    const auto& y = minority[s.neighbor];
    s.values.resize(x.size());
    // Clamped so rounding can never step outside the segment.
    for (std::size_t t = 0; t < x.size(); ++t) {
      const double v = x[t] + s.lambda * (y[t] - x[t]);
      s.values[t] = std::clamp(v, std::min(x[t], y[t]), std::max(x[t], y[t]));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace eegart::data
