// Achievable information rate under bit-metric decoding with a mismatched
// Gaussian auxiliary channel: AIR = H(X) - sum_i H(B_i | Y), estimated by
// Monte Carlo over received symbols. Bit labels are the point indices of the
// constellation (Gray order from build_qam).
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "shapinglab/constellation.hpp"
#include "shapinglab/pas.hpp"
#include "shapinglab/stats.hpp"

namespace shapinglab {

struct AirEstimate {
  double air_per_2d = 0.0;       // bits per complex symbol
  double air_adjusted = 0.0;     // pilot-rate adjusted
  Interval ci;                   // batch-means 95% interval on air_per_2d
};

// residual-variance estimate for the auxiliary channel
inline double estimate_noise_var(const SymbolFrame& tx, const SymbolFrame& rx) {
  if (tx.size() != rx.size()) throw std::invalid_argument("noise var: frame length mismatch");
  CompensatedSum s;
  std::size_t n = 0;
  for (std::size_t k = 0; k < tx.size(); ++k) {
    if (tx.pilot_mask[k]) continue;
    s.add(std::norm(rx.x[k] - tx.x[k]));
    ++n;
    if (tx.dual_pol() && rx.dual_pol()) {
      s.add(std::norm(rx.y[k] - tx.y[k]));
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("noise var: no data symbols");
  return s.value() / double(n);
}

namespace detail {

// per-symbol sum of the bit-level mismatched informations
// -sum_i log2 P(b_i | y) with P from the Gaussian metric
inline double bmd_bit_information(const Constellation& c, cplx y, std::size_t tx_index,
                                  double noise_var) {
  const std::size_t m = c.size();
  std::size_t bits = 0;
  while ((std::size_t(1) << bits) < m) ++bits;
  // log-domain weights log(p_j) - |y - x_j|^2 / sigma^2
  thread_local std::vector<double> logw;
  logw.resize(m);
  double maxw = -1e300;
  for (std::size_t j = 0; j < m; ++j) {
    const double pj = c.probs()[j];
    logw[j] = (pj > 0.0 ? std::log(pj) : -1e300) - std::norm(y - c.points()[j]) / noise_var;
    maxw = std::max(maxw, logw[j]);
  }
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) total += std::exp(logw[j] - maxw);
  double acc = 0.0;
  for (std::size_t i = 0; i < bits; ++i) {
    const std::size_t bit = (tx_index >> (bits - 1 - i)) & 1;
    double part = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (((j >> (bits - 1 - i)) & 1) == bit) part += std::exp(logw[j] - maxw);
    acc += -std::log2(part / total);
  }
  return acc;
}

inline std::size_t nearest_point(const Constellation& c, cplx x) {
  std::size_t best = 0;
  double bd = std::norm(x - c.points()[0]);
  for (std::size_t j = 1; j < c.size(); ++j) {
    const double d = std::norm(x - c.points()[j]);
    if (d < bd) {
      bd = d;
      best = j;
    }
  }
  return best;
}

}  // namespace detail

inline AirEstimate air_bmd(const SymbolFrame& tx, const SymbolFrame& rx, const Constellation& c,
                           double noise_var) {
  if (tx.size() != rx.size()) throw std::invalid_argument("air: frame length mismatch");
  if (tx.size() == 0) throw std::invalid_argument("air: empty frame");
  if (noise_var <= 0.0) throw std::invalid_argument("air: noise variance must be positive");
  const double hx = entropy(c);
  CompensatedSum total;
  std::vector<double> batch_acc;
  CompensatedSum cur;
  std::size_t n = 0, in_batch = 0;
  const std::size_t batch_target = std::max<std::size_t>(64, tx.size() / 16);
  auto feed = [&](cplx xs, cplx ys) {
    const double v = detail::bmd_bit_information(c, ys, detail::nearest_point(c, xs), noise_var);
    total.add(v);
    cur.add(v);
    ++n;
    if (++in_batch == batch_target) {
      batch_acc.push_back(cur.value() / double(in_batch));
      cur = CompensatedSum();
      in_batch = 0;
    }
  };
  for (std::size_t k = 0; k < tx.size(); ++k) {
    if (tx.pilot_mask[k]) continue;
    feed(tx.x[k], rx.x[k]);
    if (tx.dual_pol() && rx.dual_pol()) feed(tx.y[k], rx.y[k]);
  }
  if (n == 0) throw std::invalid_argument("air: no data symbols");
  AirEstimate out;
  out.air_per_2d = hx - total.value() / double(n);
  out.air_adjusted = out.air_per_2d * (tx.size() ? double(tx.data_count()) / double(tx.size()) : 1.0);
  if (batch_acc.size() >= 4) {
    const double bm = mean(batch_acc);
    const double sd = std::sqrt(variance(batch_acc) / double(batch_acc.size() - 1));
    out.ci = {hx - bm - 2.0 * sd, hx - bm + 2.0 * sd};
  } else {
    out.ci = {out.air_per_2d, out.air_per_2d};
  }
  return out;
}

}  // namespace shapinglab
