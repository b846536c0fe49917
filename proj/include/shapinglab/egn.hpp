// Kurtosis-based NLIN coefficient prediction: eta ~ eta1 + eta2 (mu4 - 2),
// with the eta2 weight split between intra- and inter-channel contributions
// calibrated from single-channel and multi-channel reference sweeps. Windowed
// standardized moments substitute for mu4 when the input has block structure.
#pragma once

#include <cmath>
#include <stdexcept>

#include "shapinglab/gnfit.hpp"

namespace shapinglab {

struct EgnCalibration {
  double eta1 = 0.0;      // Gaussian-reference NLIN coefficient
  double eta2_spm = 0.0;  // kurtosis weight, intra-channel part
  double eta2_xpm = 0.0;  // kurtosis weight, inter-channel part
  double p_ase = 0.0;     // accumulated ASE for the optimum-SNR expression

  bool calibrated() const { return eta1 > 0.0; }

  double eta(double mu4_spm_window, double mu4_xpm_window) const {
    if (!calibrated()) throw std::logic_error("egn: calibration missing for this link");
    return eta1 + eta2_spm * (mu4_spm_window - 2.0) + eta2_xpm * (mu4_xpm_window - 2.0);
  }

  double predicted_snr_opt_db(double mu4_spm_window, double mu4_xpm_window) const {
    const GnFit f{p_ase, eta(mu4_spm_window, mu4_xpm_window)};
    return f.optimum_snr_db();
  }
};

// two-point calibration: fitted eta for two distributions with known mu4
// solves eta = eta1 + eta2 (mu4 - 2) exactly
struct EtaLine {
  double eta1 = 0.0;
  double eta2 = 0.0;
};

inline EtaLine fit_eta_line(double mu4_a, double eta_a, double mu4_b, double eta_b) {
  if (mu4_a == mu4_b) throw std::invalid_argument("eta fit: need two distinct mu4 values");
  EtaLine l;
  l.eta2 = (eta_a - eta_b) / (mu4_a - mu4_b);
  l.eta1 = eta_a - l.eta2 * (mu4_a - 2.0);
  return l;
}

// assemble the full calibration from a single-channel line (SPM only) and a
// multi-channel line (SPM + XPM): eta2_xpm = eta2_total - eta2_spm, and the
// Gaussian reference eta1 comes from the multi-channel line
inline EgnCalibration make_calibration(const EtaLine& single_channel, const EtaLine& multi_channel,
                                       double p_ase) {
  EgnCalibration c;
  c.eta1 = multi_channel.eta1;
  c.eta2_spm = single_channel.eta2;
  c.eta2_xpm = multi_channel.eta2 - single_channel.eta2;
  c.p_ase = p_ase;
  if (c.eta2_xpm < 0.0) c.eta2_xpm = 0.0;  // sampling noise guard
  return c;
}

}  // namespace shapinglab
