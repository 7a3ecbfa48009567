#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "eegart/signal/dsp.hpp"

namespace eegart::signal {

namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// One r2c plan per length. Planning is not thread-safe in FFTW, so it is
// serialized; execution uses the new-array interface on caller buffers.
fftw_plan r2c_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  std::unique_ptr<double, FftwFree> in(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(n / 2 + 1));
  fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
  if (!p) throw std::runtime_error("fftw: planning failed");
  plans.emplace(n, p);
  return p;
}

}  // namespace

PowerSpectrum welch_psd(std::span<const double> values, double rate_hz, std::size_t seg_len,
                        double overlap) {
  if (!(rate_hz > 0.0)) throw std::invalid_argument("welch: rate must be positive");
  if (seg_len < 2) throw std::invalid_argument("welch: segment length must be >= 2");
  if (seg_len > values.size()) {
    throw std::invalid_argument("welch: segment length " + std::to_string(seg_len) +
                                " exceeds data length " + std::to_string(values.size()));
  }
  if (!(overlap >= 0.0 && overlap < 1.0)) throw std::invalid_argument("welch: overlap must be in [0,1)");

  const std::size_t n_overlap = static_cast<std::size_t>(std::floor(overlap * static_cast<double>(seg_len)));
  const std::size_t step = seg_len - n_overlap;
  const std::size_t n_seg = (values.size() - seg_len) / step + 1;
  const std::size_t n_freq = seg_len / 2 + 1;

  std::vector<double> window(seg_len);
  double wss = 0.0;
  for (std::size_t i = 0; i < seg_len; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(seg_len));
    wss += window[i] * window[i];
  }
  const double scale = 1.0 / (rate_hz * wss);

  fftw_plan plan = r2c_plan(seg_len);
  std::unique_ptr<double, FftwFree> buf(fftw_alloc_real(seg_len));
  std::unique_ptr<fftw_complex, FftwFree> spec(fftw_alloc_complex(n_freq));
  PowerSpectrum ps;
  ps.psd.assign(n_freq, 0.0);
  for (std::size_t s = 0; s < n_seg; ++s) {
    const double* seg = values.data() + s * step;
    double mean = 0.0;
    for (std::size_t i = 0; i < seg_len; ++i) mean += seg[i];
    mean /= static_cast<double>(seg_len);
    for (std::size_t i = 0; i < seg_len; ++i) buf.get()[i] = (seg[i] - mean) * window[i];
    fftw_execute_dft_r2c(plan, buf.get(), spec.get());
    for (std::size_t k = 0; k < n_freq; ++k) {
      const double re = spec.get()[k][0], im = spec.get()[k][1];
      ps.psd[k] += re * re + im * im;
    }
  }
  const bool even = seg_len % 2 == 0;
  for (std::size_t k = 0; k < n_freq; ++k) {
    double v = ps.psd[k] * scale / static_cast<double>(n_seg);
    const bool edge = k == 0 || (even && k == n_freq - 1);
    if (!edge) v *= 2.0;
    ps.psd[k] = v;
  }
  ps.resolution_hz = rate_hz / static_cast<double>(seg_len);
  ps.freqs_hz.resize(n_freq);
  for (std::size_t k = 0; k < n_freq; ++k) ps.freqs_hz[k] = static_cast<double>(k) * ps.resolution_hz;
  return ps;
}

double band_power(const PowerSpectrum& ps, double lo_hz, double hi_hz) {
  const auto& f = ps.freqs_hz;
  const auto& p = ps.psd;
  if (f.size() < 2 || f.size() != p.size()) throw std::invalid_argument("band_power: malformed spectrum");
  if (!(lo_hz < hi_hz)) throw std::invalid_argument("band_power: empty band");
  if (lo_hz < f.front() || hi_hz > f.back()) {
    throw std::invalid_argument("band_power: band outside spectrum range");
  }
  auto interp = [&](double x) {
    auto it = std::upper_bound(f.begin(), f.end(), x);
    if (it == f.end()) return p.back();
    const std::size_t i = static_cast<std::size_t>(it - f.begin());
    const double t = (x - f[i - 1]) / (f[i] - f[i - 1]);
    return p[i - 1] + t * (p[i] - p[i - 1]);
  };
  // Knots: lo, every bin strictly inside, hi.
  double total = 0.0;
  double x_prev = lo_hz, y_prev = interp(lo_hz);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] <= lo_hz) continue;
    if (f[i] >= hi_hz) break;
    total += 0.5 * (p[i] + y_prev) * (f[i] - x_prev);
    x_prev = f[i];
    y_prev = p[i];
  }
  total += 0.5 * (interp(hi_hz) + y_prev) * (hi_hz - x_prev);
  return total;
}

}  // namespace eegart::signal
