// Constellations, probability distributions, moments, entropy and the
// linear shaping-gain figure of merit.
//
// QAM constellations are built as products of per-dimension PAM amplitude
// distributions with uniform signs, matching the amplitude-shaping
// architecture: shaping acts on amplitudes, signs stay equiprobable.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "shapinglab/stats.hpp"

namespace shapinglab {

struct MomentReport {
  double mu4 = 0.0;  // E|x|^4 / E^2
  double mu6 = 0.0;  // E|x|^6 / E^3
  double excess_kurtosis() const { return mu4 - 2.0; }  // vs circular Gaussian
};

class Constellation {
 public:
  Constellation() = default;
  Constellation(std::vector<std::complex<double>> points, std::vector<double> probs,
                std::string label = {})
      : points_(std::move(points)), probs_(std::move(probs)), label_(std::move(label)) {
    validate();
  }

  const std::vector<std::complex<double>>& points() const { return points_; }
  const std::vector<double>& probs() const { return probs_; }
  const std::string& label() const { return label_; }
  std::size_t size() const { return points_.size(); }

  double mean_energy() const {
    CompensatedSum s;
    for (std::size_t i = 0; i < points_.size(); ++i) s.add(probs_[i] * std::norm(points_[i]));
    return s.value();
  }

  std::complex<double> mean() const {
    CompensatedSum re, im;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      re.add(probs_[i] * points_[i].real());
      im.add(probs_[i] * points_[i].imag());
    }
    return {re.value(), im.value()};
  }

  // amplitude levels of one real dimension, positive and ascending; assumes a
  // square product constellation
  std::vector<double> amplitude_levels() const {
    std::vector<double> lv;
    for (const auto& p : points_) {
      const double a = std::abs(p.real());
      if (a <= 0.0) continue;
      bool found = false;
      for (double l : lv)
        if (std::abs(l - a) < 1e-12 * std::max(1.0, a)) found = true;
      if (!found) lv.push_back(a);
    }
    std::sort(lv.begin(), lv.end());
    return lv;
  }

  Constellation scaled(double s) const {
    std::vector<std::complex<double>> pts(points_);
    for (auto& p : pts) p *= s;
    return Constellation(std::move(pts), probs_, label_);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["points"] = nlohmann::json::array();
    for (const auto& p : points_) j["points"].push_back({p.real(), p.imag()});
    j["probs"] = probs_;
    j["label"] = label_;
    return j;
  }

  static Constellation from_json(const nlohmann::json& j) {
    std::vector<std::complex<double>> pts;
    for (const auto& p : j.at("points")) pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    return Constellation(std::move(pts), j.at("probs").get<std::vector<double>>(),
                         j.value("label", std::string{}));
  }

 private:
  void validate() const {
    if (points_.size() != probs_.size() || points_.empty())
      throw std::invalid_argument("constellation: points/probs size mismatch");
    CompensatedSum s;
    for (double p : probs_) {
      if (p < 0.0) throw std::invalid_argument("constellation: negative probability");
      s.add(p);
    }
    if (std::abs(s.value() - 1.0) > 1e-12)
      throw std::invalid_argument("constellation: probabilities must sum to 1");
  }

  std::vector<std::complex<double>> points_;
  std::vector<double> probs_;
  std::string label_;
};

// Maxwell-Boltzmann weights over a set of signal points: p_i ~ exp(-lambda |x_i|^2)
inline std::vector<double> mb_distribution(std::span<const double> amplitudes, double lambda) {
  if (amplitudes.empty()) throw std::invalid_argument("mb_distribution: empty amplitude set");
  if (lambda < 0.0) throw std::invalid_argument("mb_distribution: lambda must be >= 0");
  // subtract the smallest energy before exponentiating so large lambda stays finite
  double emin = std::numeric_limits<double>::infinity();
  for (double a : amplitudes) emin = std::min(emin, a * a);
  std::vector<double> p(amplitudes.size());
  CompensatedSum z;
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    p[i] = std::exp(-lambda * (amplitudes[i] * amplitudes[i] - emin));
    z.add(p[i]);
  }
  for (auto& v : p) v /= z.value();
  return p;
}

namespace detail {

inline int isqrt_exact(int m) {
  const int r = int(std::lround(std::sqrt(double(m))));
  return r * r == m ? r : -1;
}

// binary-reflected Gray code
inline unsigned gray(unsigned v) { return v ^ (v >> 1); }

}  // namespace detail

// Gray-labelled square M-QAM, normalized to unit mean energy. Point order is
// label order: the first log2(sqrt M) label bits select the I level, the rest
// the Q level, each through a Gray map over levels -(sqrt M - 1) ... +(sqrt M - 1).
inline Constellation build_qam(int m, std::span<const double> probs = {}) {
  const int side = detail::isqrt_exact(m);
  if (side < 2 || (side & (side - 1)) != 0)
    throw std::invalid_argument("build_qam: M must be a square power of four");
  if (!probs.empty() && int(probs.size()) != m)
    throw std::invalid_argument("build_qam: probs length mismatch");
  std::vector<std::complex<double>> pts(m);
  int bits_per_dim = 0;
  while ((1 << bits_per_dim) < side) ++bits_per_dim;
  for (int label = 0; label < m; ++label) {
    const unsigned li = unsigned(label) >> bits_per_dim;
    const unsigned lq = unsigned(label) & unsigned(side - 1);
    // Gray position g in 0..side-1 maps to level 2g - (side-1)
    unsigned gi = 0, gq = 0;
    for (unsigned g = 0; g < unsigned(side); ++g) {
      if (detail::gray(g) == li) gi = g;
      if (detail::gray(g) == lq) gq = g;
    }
    pts[label] = {double(2 * int(gi) - (side - 1)), double(2 * int(gq) - (side - 1))};
  }
  std::vector<double> pr(probs.begin(), probs.end());
  if (pr.empty()) pr.assign(m, 1.0 / double(m));
  Constellation raw(std::move(pts), std::move(pr), std::to_string(m) + "QAM");
  const double e = raw.mean_energy();
  if (e <= 0.0) throw std::invalid_argument("build_qam: zero mean energy");
  return raw.scaled(1.0 / std::sqrt(e));
}

// per-point probabilities for a square QAM induced by a per-amplitude
// distribution on one dimension (PAS product structure: independent dimensions,
// uniform signs)
inline std::vector<double> qam_probs_from_amplitudes(int m, std::span<const double> amp_probs) {
  const int side = detail::isqrt_exact(m);
  const int levels = side / 2;  // amplitudes per dimension
  if (int(amp_probs.size()) != levels)
    throw std::invalid_argument("qam_probs_from_amplitudes: need sqrt(M)/2 amplitude probs");
  // reconstruct the same label->point order as build_qam, then price each point
  const Constellation uni = build_qam(m);
  // amplitude index of level value v in {1,3,5,...}: (|v|-1)/2 on the unnormalized grid
  const double scale = std::abs(uni.points()[0].real());  // unused, kept simple below
  (void)scale;
  // recover integer grid from the normalized points via ranking
  std::vector<double> levels_sorted;
  for (const auto& p : uni.points()) {
    const double a = std::abs(p.real());
    bool seen = false;
    for (double l : levels_sorted)
      if (std::abs(l - a) < 1e-12) seen = true;
    if (!seen) levels_sorted.push_back(a);
  }
  std::sort(levels_sorted.begin(), levels_sorted.end());
  auto amp_index = [&](double a) {
    for (std::size_t i = 0; i < levels_sorted.size(); ++i)
      if (std::abs(levels_sorted[i] - a) < 1e-9) return int(i);
    throw std::logic_error("amplitude not on grid");
  };
  std::vector<double> pr(m);
  for (int i = 0; i < m; ++i) {
    const auto& p = uni.points()[i];
    pr[i] = 0.25 * amp_probs[amp_index(std::abs(p.real()))] * amp_probs[amp_index(std::abs(p.imag()))];
  }
  return pr;
}

inline double entropy_bits(std::span<const double> probs) {
  CompensatedSum h;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("entropy: negative probability");
    if (p > 0.0) h.add(-p * std::log2(p));
  }
  return h.value();
}

inline double entropy(const Constellation& c) { return entropy_bits(c.probs()); }

inline MomentReport standardized_moments(const Constellation& c) {
  const double e = c.mean_energy();
  if (e <= 0.0) throw std::invalid_argument("standardized_moments: zero mean energy");
  CompensatedSum m4, m6;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double e2 = std::norm(c.points()[i]);
    m4.add(c.probs()[i] * e2 * e2);
    m6.add(c.probs()[i] * e2 * e2 * e2);
  }
  return {m4.value() / (e * e), m6.value() / (e * e * e)};
}

inline MomentReport moments_from_samples(std::span<const std::complex<double>> xs) {
  if (xs.empty()) throw std::invalid_argument("moments_from_samples: empty");
  CompensatedSum s2, s4, s6;
  for (const auto& x : xs) {
    const double e2 = std::norm(x);
    s2.add(e2);
    s4.add(e2 * e2);
    s6.add(e2 * e2 * e2);
  }
  const double n = double(xs.size());
  const double e = s2.value() / n;
  return {s4.value() / n / (e * e), s6.value() / n / (e * e * e)};
}

// minimum squared distance over support points (prob > 0); exact comparisons
inline double min_squared_distance(const Constellation& c) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.probs()[i] <= 0.0) continue;
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      if (c.probs()[j] <= 0.0) continue;
      best = std::min(best, std::norm(c.points()[i] - c.points()[j]));
    }
  }
  if (!std::isfinite(best)) throw std::invalid_argument("min_squared_distance: < 2 support points");
  return best;
}

// CFM-style figure (2^{2H_1} - 1) d_min^2 / (6 P) with H_1 the per-dimension
// entropy (half the 2-D entropy for product constellations) and P the 2-D mean
// energy; equals 1 for uniform square QAM
inline double shaping_figure(const Constellation& c) {
  const double h1 = 0.5 * entropy(c);
  return (std::pow(2.0, 2.0 * h1) - 1.0) * min_squared_distance(c) / (6.0 * c.mean_energy());
}

// linear shaping gain of `shaped` over `ref` in dB
inline double linear_shaping_gain_db(const Constellation& shaped, const Constellation& ref) {
  const double g_ref = shaping_figure(ref);
  if (g_ref == 0.0) throw std::invalid_argument("linear_shaping_gain: reference gain is zero");
  return db10(shaping_figure(shaped) / g_ref);
}

}  // namespace shapinglab
