// Windowed energy statistics: sliding-window central moments, the energy
// dispersion index, energy autocorrelations and PSD estimates.
//
// Window sums follow the asymmetric convention
//   e_k^w = sum_{i = k - floor((w-1)/2)}^{k + floor(w/2)} e_i
// and central moments m_n^w = (1/w) avg_k (e_k^w - w)^n. The standardized
// windowed moments are the exact identities mu4^w = m2^w + 1 and
// mu6^w = m3^w + 3 m2^w + 1.
#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "shapinglab/fft.hpp"
#include "shapinglab/link.hpp"
#include "shapinglab/stats.hpp"

namespace shapinglab {

struct WindowedMomentReport {
  int w = 1;
  double m2w = 0.0;
  double m3w = 0.0;
  double mu4w = 1.0;
  double mu6w = 1.0;
  double edi = 0.0;  // psi^w = E * m2^w
};

inline WindowedMomentReport windowed_moments(std::span<const double> energies, int w,
                                             double mean_energy = 1.0) {
  if (w < 1) throw std::invalid_argument("windowed_moments: w must be >= 1");
  const std::size_t n = energies.size();
  if (n < std::size_t(2 * w) + 2)
    throw std::invalid_argument("windowed_moments: sequence too short for the window");
  // normalize by the sample mean so window sums center exactly at w
  const double ebar = mean(energies);
  if (ebar <= 0.0) throw std::invalid_argument("windowed_moments: non-positive mean energy");
  const int lo = (w - 1) / 2;  // window reaches k - lo .. k + (w/2)
  const int hi = w / 2;
  double window = 0.0;
  for (int i = -lo; i <= hi; ++i) window += energies[std::size_t(lo + i)] / ebar;
  CompensatedSum s2, s3;
  std::size_t count = 0;
  for (std::size_t k = std::size_t(lo);; ++k) {
    const double d = window - double(w);
    s2.add(d * d);
    s3.add(d * d * d);
    ++count;
    const std::size_t nxt = k + 1 + std::size_t(hi);
    if (nxt >= n) break;
    window += energies[nxt] / ebar - energies[k - std::size_t(lo)] / ebar;
  }
  WindowedMomentReport r;
  r.w = w;
  r.m2w = s2.value() / double(count) / double(w);
  r.m3w = s3.value() / double(count) / double(w);
  r.mu4w = r.m2w + 1.0;
  r.mu6w = r.m3w + 3.0 * r.m2w + 1.0;
  r.edi = mean_energy * r.m2w;
  return r;
}

inline double edi(std::span<const double> energies, int w, double mean_energy = 1.0) {
  return windowed_moments(energies, w, mean_energy).edi;
}

// closed-form CCDM EDI for D <= w + 1:
//   psi^w = E (mu4 - 1)(D + 1) / (3 w)
// equivalently -log psi = -log(D+1) + log(3w / ((mu4 - 1) E))
inline double ccdm_edi_closed_form(int block_length, int w, double mu4, double mean_energy = 1.0) {
  if (block_length > w + 1)
    throw std::invalid_argument("ccdm_edi_closed_form: requires D <= w + 1");
  if (mu4 <= 1.0) return 0.0;
  return mean_energy * (mu4 - 1.0) * double(block_length + 1) / (3.0 * double(w));
}

// i.i.d. energy autocorrelation: (mu4 - 1) delta_k
inline std::vector<double> iid_energy_autocorrelation(double mu4, int k_max) {
  std::vector<double> r(std::size_t(k_max) + 1, 0.0);
  r[0] = mu4 - 1.0;
  return r;
}

// CCDM average autocorrelation of (e - 1), lags 0..k_max:
//   r_0 = mu4 - 1,  r_k = (mu4 - 1)(|k|/D - 1)/(D - 1) for 1 <= |k| < D, else 0
inline std::vector<double> ccdm_energy_autocorrelation(int block_length, double mu4, int k_max) {
  std::vector<double> r(std::size_t(k_max) + 1, 0.0);
  r[0] = mu4 - 1.0;
  for (int k = 1; k <= k_max && k < block_length; ++k)
    r[std::size_t(k)] = (mu4 - 1.0) * (double(k) / block_length - 1.0) / double(block_length - 1);
  return r;
}

// cyclostationarity-averaged empirical autocorrelation, biased normalization
// 1/N so the implied spectrum stays nonnegative. When a block period is
// declared, per-phase means are removed (the process mean varies with the
// position inside a block when the index space is truncated to 2^k).
inline std::vector<double> empirical_energy_autocorrelation(std::span<const double> energies,
                                                            int k_max, int period = 0) {
  const std::size_t n = energies.size();
  if (n <= std::size_t(k_max)) throw std::invalid_argument("autocorrelation: sequence too short");
  std::vector<double> centered(energies.begin(), energies.end());
  if (period > 1) {
    std::vector<double> phase_mean(std::size_t(period), 0.0);
    std::vector<std::size_t> cnt(std::size_t(period), 0);
    for (std::size_t i = 0; i < n; ++i) {
      phase_mean[i % std::size_t(period)] += centered[i];
      ++cnt[i % std::size_t(period)];
    }
    for (std::size_t p = 0; p < phase_mean.size(); ++p) phase_mean[p] /= double(cnt[p]);
    for (std::size_t i = 0; i < n; ++i) centered[i] -= phase_mean[i % std::size_t(period)];
  } else {
    const double ebar = mean(energies);
    for (auto& v : centered) v -= ebar;
  }
  std::vector<double> r(std::size_t(k_max) + 1, 0.0);
  for (int k = 0; k <= k_max; ++k) {
    CompensatedSum s;
    for (std::size_t i = 0; i + std::size_t(k) < n; ++i)
      s.add(centered[i] * centered[i + std::size_t(k)]);
    r[std::size_t(k)] = s.value() / double(n);
  }
  return r;
}

// windowed second central moment implied by an autocorrelation sequence:
//   m2^w = (1/w) sum_{|j| < w} (w - |j|) r_j
inline double windowed_m2_from_autocorrelation(std::span<const double> r, int w) {
  double acc = double(w) * r[0];
  for (int j = 1; j < w; ++j) {
    const double rj = std::size_t(j) < r.size() ? r[std::size_t(j)] : 0.0;
    acc += 2.0 * double(w - j) * rj;
  }
  return acc / double(w);
}

struct Psd {
  std::vector<double> freq;  // cycles per symbol, [0, 0.5]
  std::vector<double> s;
};

// spectrum implied by a symmetric autocorrelation: S(f) = r0 + 2 sum r_k cos(2 pi f k)
inline Psd psd_from_autocorrelation(std::span<const double> r, int n_freq = 2048) {
  Psd p;
  p.freq.resize(std::size_t(n_freq) + 1);
  p.s.resize(std::size_t(n_freq) + 1);
  for (int i = 0; i <= n_freq; ++i) {
    const double f = 0.5 * double(i) / double(n_freq);
    double acc = r[0];
    for (std::size_t k = 1; k < r.size(); ++k)
      acc += 2.0 * r[k] * std::cos(2.0 * M_PI * f * double(k));
    p.freq[std::size_t(i)] = f;
    p.s[std::size_t(i)] = acc;
  }
  return p;
}

// averaged periodogram of (e - ebar); rectangular window, 50% overlap
inline Psd psd_estimate(std::span<const double> energies, std::size_t segment = 4096) {
  if (!is_pow2(segment)) throw std::invalid_argument("psd_estimate: segment must be a power of two");
  if (energies.size() < segment)
    throw std::invalid_argument("psd_estimate: sequence shorter than one segment");
  const double ebar = mean(energies);
  FftPlan plan(segment);
  std::vector<double> acc(segment / 2 + 1, 0.0);
  std::size_t n_seg = 0;
  for (std::size_t start = 0; start + segment <= energies.size(); start += segment / 2) {
    std::vector<cplx> buf(segment);
    for (std::size_t i = 0; i < segment; ++i) buf[i] = energies[start + i] - ebar;
    plan.forward(buf.data());
    for (std::size_t k = 0; k <= segment / 2; ++k) acc[k] += std::norm(buf[k]) / double(segment);
    ++n_seg;
  }
  Psd p;
  p.freq.resize(acc.size());
  p.s.resize(acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) {
    p.freq[k] = double(k) / double(segment);
    p.s[k] = acc[k] / double(n_seg);
  }
  return p;
}

}  // namespace shapinglab
