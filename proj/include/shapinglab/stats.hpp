// Small numerical helpers shared across modules: compensated sums, moments,
// correlation measures, bootstrap intervals, dense least squares, 1-D k-means.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "shapinglab/rng.hpp"

namespace shapinglab {

// Kahan-Babuska (Neumaier) compensated accumulator
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double csum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty range");
  return csum(xs) / double(xs.size());
}

inline double variance(std::span<const double> xs) {
  const double m = mean(xs);
  CompensatedSum s;
  for (double x : xs) s.add((x - m) * (x - m));
  return s.value() / double(xs.size());
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("pearson: size mismatch");
  const double ma = mean(a), mb = mean(b);
  CompensatedSum sab, saa, sbb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab.add((a[i] - ma) * (b[i] - mb));
    saa.add((a[i] - ma) * (a[i] - ma));
    sbb.add((b[i] - mb) * (b[i] - mb));
  }
  return sab.value() / std::sqrt(saa.value() * sbb.value());
}

// |<a,b>| / (||a|| ||b||) after mean removal; correlation magnitude for
// complex-valued residual comparisons
inline double complex_correlation(std::span<const std::complex<double>> a,
                                  std::span<const std::complex<double>> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("size mismatch");
  std::complex<double> ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(a.size());
  mb /= double(b.size());
  std::complex<double> num = 0.0;
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * std::conj(b[i] - mb);
    na += std::norm(a[i] - ma);
    nb += std::norm(b[i] - mb);
  }
  return std::abs(num) / std::sqrt(na * nb);
}

inline std::vector<double> ranks(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
  std::vector<double> r(xs.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double avg = 0.5 * double(i + j) + 1.0;  // average rank for ties
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
  const auto ra = ranks(a), rb = ranks(b);
  return pearson(ra, rb);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// percentile bootstrap for the mean
inline Interval bootstrap_mean_ci(std::span<const double> xs, Rng& rng, int resamples = 2000,
                                  double level = 0.95) {
  if (xs.empty()) throw std::invalid_argument("bootstrap of empty sample");
  std::vector<double> means(resamples);
  for (int r = 0; r < resamples; ++r) {
    CompensatedSum s;
    for (std::size_t i = 0; i < xs.size(); ++i) s.add(xs[rng.below(xs.size())]);
    means[r] = s.value() / double(xs.size());
  }
  std::sort(means.begin(), means.end());
  const double a = (1.0 - level) / 2.0;
  const auto pick = [&](double q) {
    const double p = q * double(resamples - 1);
    const std::size_t k = std::size_t(p);
    const double f = p - double(k);
    return k + 1 < means.size() ? means[k] * (1 - f) + means[k + 1] * f : means.back();
  };
  return {pick(a), pick(1.0 - a)};
}

// solve A x = b for symmetric positive definite A (dense, row-major), Cholesky
inline std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  if (a.size() != n * n) throw std::invalid_argument("solve_spd: bad dimensions");
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (d <= 0.0) throw std::runtime_error("solve_spd: matrix not positive definite");
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = v / l;
    }
  }
  // forward then backward substitution
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
    b[i] = v / a[i * n + i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double v = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) v -= a[k * n + ii] * b[k];
    b[ii] = v / a[ii * n + ii];
  }
  return b;
}

// ordinary least squares y ~ X beta, X row-major n x p (n >= p)
inline std::vector<double> least_squares(const std::vector<double>& x, std::span<const double> y,
                                         std::size_t p) {
  const std::size_t n = y.size();
  if (x.size() != n * p) throw std::invalid_argument("least_squares: bad dimensions");
  std::vector<double> xtx(p * p, 0.0), xty(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a2 = 0; a2 < p; ++a2) {
      xty[a2] += x[i * p + a2] * y[i];
      for (std::size_t b2 = 0; b2 <= a2; ++b2) xtx[a2 * p + b2] += x[i * p + a2] * x[i * p + b2];
    }
  }
  for (std::size_t a2 = 0; a2 < p; ++a2)
    for (std::size_t b2 = a2 + 1; b2 < p; ++b2) xtx[a2 * p + b2] = xtx[b2 * p + a2];
  return solve_spd(std::move(xtx), std::move(xty));
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

// 1-D k-means (Lloyd) with deterministic quantile init; returns cluster centers
// and the assignment of each input
struct KMeans1D {
  std::vector<double> centers;
  std::vector<int> assign;
};

inline KMeans1D kmeans_1d(std::span<const double> xs, int k, int iters = 100) {
  if (k <= 0 || xs.empty()) throw std::invalid_argument("kmeans_1d: bad input");
  k = std::min<std::size_t>(k, xs.size());
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  KMeans1D km;
  km.centers.resize(k);
  for (int c = 0; c < k; ++c)
    km.centers[c] = sorted[std::size_t((c + 0.5) / k * double(sorted.size()))];
  km.assign.assign(xs.size(), 0);
  for (int it = 0; it < iters; ++it) {
    bool moved = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      int best = 0;
      double bd = std::abs(xs[i] - km.centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d = std::abs(xs[i] - km.centers[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (km.assign[i] != best) {
        km.assign[i] = best;
        moved = true;
      }
    }
    std::vector<double> sum(k, 0.0);
    std::vector<int> cnt(k, 0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sum[km.assign[i]] += xs[i];
      ++cnt[km.assign[i]];
    }
    for (int c = 0; c < k; ++c)
      if (cnt[c] > 0) km.centers[c] = sum[c] / cnt[c];
    if (!moved) break;
  }
  return km;
}

inline double db10(double ratio) { return 10.0 * std::log10(ratio); }
inline double from_db10(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace shapinglab
