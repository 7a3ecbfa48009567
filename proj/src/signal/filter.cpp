#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "eegart/signal/dsp.hpp"

namespace eegart::signal {

namespace {

using cplx = std::complex<double>;

Section section_from_roots(cplx z1, cplx z2, cplx p1, cplx p2) {
  const cplx b1 = -(z1 + z2), b2 = z1 * z2;
  const cplx a1 = -(p1 + p2), a2 = p1 * p2;
  return {1.0, b1.real(), b2.real(), 1.0, a1.real(), a2.real()};
}

// Steady-state DF2T state of one section for a unit step input.
std::array<double, 2> section_zi(const Section& s) {
  const double b0 = s[0], b1 = s[1], b2 = s[2], a1 = s[4], a2 = s[5];
  // (I - A^T) zi = B with A the companion matrix of a.
  const double m00 = 1.0 + a1, m01 = -1.0, m10 = a2, m11 = 1.0;
  const double r0 = b1 - a1 * b0, r1 = b2 - a2 * b0;
  const double det = m00 * m11 - m01 * m10;
  return {(r0 * m11 - m01 * r1) / det, (m00 * r1 - m10 * r0) / det};
}

void run_sos(const Sos& sos, std::vector<double>& x, const std::vector<std::array<double, 2>>* zi,
             double zi_scale) {
  for (std::size_t si = 0; si < sos.size(); ++si) {
    const auto& s = sos[si];
    double z0 = 0.0, z1 = 0.0;
    if (zi) {
      z0 = (*zi)[si][0] * zi_scale;
      z1 = (*zi)[si][1] * zi_scale;
    }
    for (double& v : x) {
      const double in = v;
      const double out = s[0] * in + z0;
      z0 = s[1] * in - s[4] * out + z1;
      z1 = s[2] * in - s[5] * out;
      v = out;
    }
  }
}

}  // namespace

Sos butterworth_bandpass_sos(double lo_hz, double hi_hz, double rate_hz, int order) {
  if (order < 1) throw std::invalid_argument("butterworth: order must be >= 1");
  if (!(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < rate_hz / 2.0)) {
    throw std::invalid_argument("butterworth: need 0 < lo < hi < rate/2");
  }
  const int N = order;
  // Pre-warped analog edges for a bilinear transform with fs = 2 (normalized).
  const double fs = 2.0;
  const double w1 = 2.0 * fs * std::tan(M_PI * (lo_hz / (rate_hz / 2.0)) / fs);
  const double w2 = 2.0 * fs * std::tan(M_PI * (hi_hz / (rate_hz / 2.0)) / fs);
  const double bw = w2 - w1, wo = std::sqrt(w1 * w2);

  // Analog low-pass prototype poles on the unit circle, then low-pass -> band-pass.
  std::vector<cplx> poles;
  for (int m = -N + 1; m < N; m += 2) {
    const cplx p = -std::exp(cplx(0.0, M_PI * m / (2.0 * N)));
    const cplx plp = p * bw / 2.0;
    const cplx root = std::sqrt(plp * plp - wo * wo);
    poles.push_back(plp + root);
    poles.push_back(plp - root);
  }
  double k = std::pow(bw, N);
  // Bilinear transform: N zeros at s = 0 map to z = 1, N at infinity to z = -1.
  const double fs2 = 2.0 * fs;
  cplx gain_num = std::pow(cplx(fs2, 0.0), N);
  cplx gain_den = 1.0;
  std::vector<cplx> zp;
  for (const auto& p : poles) {
    zp.push_back((fs2 + p) / (fs2 - p));
    gain_den *= fs2 - p;
  }
  k *= (gain_num / gain_den).real();

  // Pair conjugate poles; pair leftover real poles with each other.
  std::vector<cplx> upper, reals;
  for (const auto& p : zp) {
    if (std::abs(p.imag()) > 1e-10 * std::max(1.0, std::abs(p))) {
      if (p.imag() > 0) upper.push_back(p);
    } else {
      reals.push_back(cplx(p.real(), 0.0));
    }
  }
  std::sort(upper.begin(), upper.end(),
            [](const cplx& a, const cplx& b) { return std::abs(a) < std::abs(b); });
  std::sort(reals.begin(), reals.end(), [](const cplx& a, const cplx& b) { return a.real() < b.real(); });
  if (upper.size() * 2 + reals.size() != zp.size() || reals.size() % 2 != 0) {
    throw std::runtime_error("butterworth: unexpected pole layout");
  }
  Sos sos;
  for (const auto& p : upper) sos.push_back(section_from_roots(1.0, -1.0, p, std::conj(p)));
  for (std::size_t i = 0; i < reals.size(); i += 2) {
    sos.push_back(section_from_roots(1.0, -1.0, reals[i], reals[i + 1]));
  }
  for (int i = 0; i < 3; ++i) sos[0][i] *= k;
  return sos;
}

Sos notch_sos(double f0_hz, double q, double rate_hz) {
  if (!(f0_hz > 0.0 && f0_hz < rate_hz / 2.0)) {
    throw std::invalid_argument("notch: f0 must lie strictly between 0 and the Nyquist rate");
  }
  if (!(q > 0.0)) throw std::invalid_argument("notch: q must be positive");
  const double w0 = 2.0 * M_PI * f0_hz / rate_hz;
  const double bw = w0 / q;
  const double beta = std::tan(bw / 2.0);
  const double gain = 1.0 / (1.0 + beta);
  const double c = std::cos(w0);
  return {{gain, -2.0 * gain * c, gain, 1.0, -2.0 * gain * c, 2.0 * gain - 1.0}};
}

double sos_gain(const Sos& sos, double f_hz, double rate_hz) {
  const cplx z = std::exp(cplx(0.0, -2.0 * M_PI * f_hz / rate_hz));
  cplx h = 1.0;
  for (const auto& s : sos) {
    h *= (s[0] + s[1] * z + s[2] * z * z) / (s[3] + s[4] * z + s[5] * z * z);
  }
  return std::abs(h);
}

std::vector<double> sosfilt(const Sos& sos, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  run_sos(sos, y, nullptr, 0.0);
  return y;
}

std::size_t default_padlen(const Sos& sos) { return 3 * (2 * sos.size() + 1); }

std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x, std::size_t padlen) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  padlen = std::min(padlen, n - 1);

  std::vector<double> ext(n + 2 * padlen);
  for (std::size_t i = 0; i < padlen; ++i) ext[i] = 2.0 * x[0] - x[padlen - i];
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(padlen));
  for (std::size_t i = 0; i < padlen; ++i) ext[padlen + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

  // Cascade steady state: each section sees the DC gain of those before it.
  std::vector<std::array<double, 2>> zi;
  double scale = 1.0;
  for (const auto& s : sos) {
    auto z = section_zi(s);
    zi.push_back({z[0] * scale, z[1] * scale});
    scale *= (s[0] + s[1] + s[2]) / (s[3] + s[4] + s[5]);
  }

  run_sos(sos, ext, &zi, ext.front());
  std::reverse(ext.begin(), ext.end());
  run_sos(sos, ext, &zi, ext.front());
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(padlen),
          ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

Recording butterworth_bandpass(const Recording& rec, double lo_hz, double hi_hz, int order) {
  rec.validate();
  const Sos sos = butterworth_bandpass_sos(lo_hz, hi_hz, rec.rate_hz, order);
  const auto pad = std::max(default_padlen(sos),
                            static_cast<std::size_t>(std::ceil(3.0 * rec.rate_hz / lo_hz)));
  Recording out = rec;
  out.samples = sosfiltfilt(sos, rec.samples, pad);
  return out;
}

Recording notch_filter(const Recording& rec, double f0_hz, double q) {
  rec.validate();
  const Sos sos = notch_sos(f0_hz, q, rec.rate_hz);
  Recording out = rec;
  out.samples = sosfiltfilt(sos, rec.samples, default_padlen(sos));
  return out;
}

}  // namespace eegart::signal
