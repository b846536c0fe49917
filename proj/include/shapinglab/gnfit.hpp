// Gaussian-noise model fitting: SNR(P) = P / (P_ase + eta P^3), optimum power
// and the nonlinear shaping gain computed from fitted models.
#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "shapinglab/stats.hpp"

namespace shapinglab {

struct GnFit {
  double p_ase = 0.0;  // accumulated ASE power in the receiver bandwidth, W
  double eta = 0.0;    // NLIN coefficient, 1/W^2

  double snr_at(double p_w) const { return p_w / (p_ase + eta * p_w * p_w * p_w); }
  double optimum_power_w() const { return std::cbrt(p_ase / (2.0 * eta)); }
  double optimum_snr_linear() const {
    return std::pow(2.0 / p_ase, 2.0 / 3.0) / (3.0 * std::cbrt(eta));
  }
  double optimum_snr_db() const { return db10(optimum_snr_linear()); }
  double optimum_power_dbm() const { return db10(optimum_power_w() * 1e3); }
};

// least squares on the noise power P/SNR = P_ase + eta P^3
inline GnFit fit_gn_model(std::span<const double> powers_w, std::span<const double> snr_linear) {
  if (powers_w.size() != snr_linear.size() || powers_w.size() < 3)
    throw std::invalid_argument("gn fit: need at least three power points");
  const std::size_t n = powers_w.size();
  std::vector<double> x(n * 2), yv(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (powers_w[i] <= 0.0 || snr_linear[i] <= 0.0)
      throw std::invalid_argument("gn fit: powers and SNRs must be positive");
    x[i * 2] = 1.0;
    x[i * 2 + 1] = powers_w[i] * powers_w[i] * powers_w[i];
    yv[i] = powers_w[i] / snr_linear[i];
  }
  const auto beta = least_squares(x, yv, 2);
  GnFit f{beta[0], beta[1]};
  if (f.p_ase <= 0.0 || f.eta <= 0.0)
    throw std::runtime_error("gn fit: non-physical fit (sweep not unimodal in range?)");
  return f;
}

// nonlinear shaping gain g_nl of `shaped` over `ref`, three equivalent routes
inline double nonlinear_gain_db_from_eta(const GnFit& ref, const GnFit& shaped) {
  return 10.0 / 3.0 * std::log10(ref.eta / shaped.eta);
}
inline double nonlinear_gain_db_from_popt(const GnFit& ref, const GnFit& shaped) {
  // the P_ase terms cancel when both fits share the same accumulated ASE
  return db10(shaped.optimum_power_w() / ref.optimum_power_w()) +
         10.0 / 3.0 * std::log10(ref.p_ase / shaped.p_ase);
}
inline double nonlinear_gain_db_from_snropt(const GnFit& ref, const GnFit& shaped) {
  // valid when both systems see the same accumulated ASE
  return db10(shaped.optimum_snr_linear() / ref.optimum_snr_linear()) +
         10.0 / 3.0 * std::log10(shaped.p_ase / ref.p_ase) * 2.0;
}

}  // namespace shapinglab
