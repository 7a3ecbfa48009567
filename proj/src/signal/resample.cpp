#include <cmath>
#include <numeric>
#include <stdexcept>

#include "eegart/signal/dsp.hpp"

namespace eegart::signal {

std::pair<std::size_t, std::size_t> rational_ratio(double from_hz, double to_hz) {
  if (!(from_hz > 0.0) || !(to_hz > 0.0)) throw std::invalid_argument("resample: rates must be positive");
  if (from_hz == std::floor(from_hz) && to_hz == std::floor(to_hz) && from_hz < 1e9 && to_hz < 1e9) {
    const auto a = static_cast<std::size_t>(to_hz), b = static_cast<std::size_t>(from_hz);
    const std::size_t g = std::gcd(a, b);
    return {a / g, b / g};
  }
  // Continued fraction of to/from.
  const double target = to_hz / from_hz;
  std::size_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = target;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(r);
    const auto ai = static_cast<std::size_t>(a);
    const std::size_t h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > 10000) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - target) < 1e-12 * target) break;
    const double frac = r - a;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  if (h1 == 0 || k1 == 0) throw std::invalid_argument("resample: cannot approximate rate ratio");
  return {h1, k1};
}

namespace {

std::vector<double> design_resample_filter(std::size_t up, std::size_t down) {
  const std::size_t max_rate = std::max(up, down);
  const double cutoff = 1.0 / static_cast<double>(max_rate);
  const std::size_t half_len = 10 * max_rate;
  const std::size_t n = 2 * half_len + 1;
  const double beta = 5.0;
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  std::vector<double> h(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = static_cast<double>(i) - static_cast<double>(half_len);
    const double x = cutoff * m;
    const double sinc = x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
    const double r = 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0;
    const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[i] = cutoff * sinc * win;
    total += h[i];
  }
  for (auto& v : h) v *= static_cast<double>(up) / total;
  return h;
}

}  // namespace

std::vector<double> resample_poly(std::span<const double> x, std::size_t up, std::size_t down) {
  if (up == 0 || down == 0) throw std::invalid_argument("resample_poly: factors must be positive");
  if (x.empty()) throw std::invalid_argument("resample_poly: empty input");
  const std::size_t g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return {x.begin(), x.end()};

  const auto h = design_resample_filter(up, down);
  const auto half_len = static_cast<std::ptrdiff_t>((h.size() - 1) / 2);
  const auto taps = static_cast<std::ptrdiff_t>(h.size());
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto U = static_cast<std::ptrdiff_t>(up), D = static_cast<std::ptrdiff_t>(down);
  const std::size_t n_out = (x.size() * up + down - 1) / down;

  // y[m] = sum_k h[k] * u[m*D + half_len - k], u the zero-stuffed input.
  std::vector<double> y(n_out);
  for (std::size_t m = 0; m < n_out; ++m) {
    const std::ptrdiff_t j0 = static_cast<std::ptrdiff_t>(m) * D + half_len;
    // input index i contributes with k = j0 - i*U in [0, taps)
    std::ptrdiff_t i_lo = j0 - (taps - 1) <= 0 ? 0 : (j0 - (taps - 1) + U - 1) / U;
    std::ptrdiff_t i_hi = std::min(n - 1, j0 / U);
    double acc = 0.0;
    for (std::ptrdiff_t i = i_lo; i <= i_hi; ++i) acc += h[j0 - i * U] * x[i];
    y[m] = acc;
  }
  return y;
}

Recording resample(const Recording& rec, double target_hz) {
  rec.validate();
  if (!(target_hz > 0.0)) throw std::invalid_argument("resample: target rate must be positive");
  Recording out;
  out.id = rec.id;
  out.start_offset_s = rec.start_offset_s;
  out.rate_hz = target_hz;
  if (rec.rate_hz == target_hz) {
    out.samples = rec.samples;
    return out;
  }
  const auto [up, down] = rational_ratio(rec.rate_hz, target_hz);
  out.samples = resample_poly(rec.samples, up, down);
  return out;
}

}  // namespace eegart::signal
