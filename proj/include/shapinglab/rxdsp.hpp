// Coherent receiver DSP: channel extraction, exact chromatic dispersion
// compensation, matched filtering, carrier phase recovery, least-squares
// rescaling and effective-SNR estimation.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "shapinglab/link.hpp"
#include "shapinglab/pas.hpp"
#include "shapinglab/ssfm.hpp"
#include "shapinglab/stats.hpp"

namespace shapinglab {

struct SnrEstimate {
  double snr_db = 0.0;
  Interval ci;       // bootstrap 95% on the dB value
  bool capped = false;
};

// effective SNR E||x||^2 / E||y - x||^2 over data symbols (pilots excluded)
inline SnrEstimate measure_effective_snr(const SymbolFrame& tx, const SymbolFrame& rx,
                                         std::uint64_t boot_seed = 1) {
  if (tx.size() != rx.size()) throw std::invalid_argument("snr: frame length mismatch");
  std::vector<double> sig, err;
  auto accumulate = [&](const std::vector<cplx>& a, const std::vector<cplx>& b) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (tx.pilot_mask[k]) continue;
      sig.push_back(std::norm(a[k]));
      err.push_back(std::norm(b[k] - a[k]));
    }
  };
  accumulate(tx.x, rx.x);
  if (tx.dual_pol() && rx.dual_pol()) accumulate(tx.y, rx.y);
  if (sig.empty()) throw std::invalid_argument("snr: no data symbols");
  const double es = mean(sig);
  const double ee = mean(err);
  SnrEstimate out;
  if (ee <= 0.0) {
    out.snr_db = 300.0;  // numerically error-free
    out.capped = true;
    out.ci = {300.0, 300.0};
    return out;
  }
  out.snr_db = db10(es / ee);
  Rng rng(boot_seed);
  std::vector<double> boot(200);
  for (auto& b : boot) {
    CompensatedSum s, e;
    for (std::size_t i = 0; i < err.size(); ++i) {
      const auto j = rng.below(err.size());
      s.add(sig[j]);
      e.add(err[j]);
    }
    b = db10(s.value() / e.value());
  }
  std::sort(boot.begin(), boot.end());
  out.ci = {boot[4], boot[194]};
  return out;
}

namespace detail {

inline void cdc_inplace(std::vector<cplx>& samples, const LinkConfig& link, double sample_rate) {
  FftPlan plan(samples.size());
  plan.forward(samples.data());
  const double b2l = link.beta2_si() * link.total_length_m();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double w = 2.0 * M_PI * fft_bin_freq(i, samples.size(), sample_rate);
    samples[i] *= std::polar(1.0, -0.5 * b2l * w * w);
  }
  plan.inverse(samples.data());
}

inline double wrap_phase(double p) {
  while (p > M_PI) p -= 2.0 * M_PI;
  while (p < -M_PI) p += 2.0 * M_PI;
  return p;
}

// circular moving average of the per-symbol genie phase, c = 1/(2N+1)
inline std::vector<double> moving_average_phase(const std::vector<double>& theta, int n_cpr) {
  const std::size_t n = theta.size();
  std::vector<double> out(n, 0.0);
  const double c = 1.0 / double(2 * n_cpr + 1);
  double acc = 0.0;
  for (int m = -n_cpr; m <= n_cpr; ++m) acc += theta[std::size_t((m + long(n)) % long(n))];
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = c * acc;
    const std::size_t drop = (k + n - std::size_t(n_cpr)) % n;
    const std::size_t add = (k + std::size_t(n_cpr) + 1) % n;
    acc += theta[add] - theta[drop];
  }
  return out;
}

// pilot-aided linear interpolation of the phase over the frame (circular)
inline std::vector<double> lpa_phase(const std::vector<double>& pilot_phase,
                                     const std::vector<std::size_t>& pilot_pos, std::size_t n) {
  if (pilot_pos.size() < 2) throw std::invalid_argument("lpa: need at least two pilots");
  // unwrap pilot-to-pilot increments
  std::vector<double> ph(pilot_phase.size());
  ph[0] = pilot_phase[0];
  for (std::size_t i = 1; i < ph.size(); ++i)
    ph[i] = ph[i - 1] + wrap_phase(pilot_phase[i] - pilot_phase[i - 1]);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i + 1 < pilot_pos.size(); ++i) {
    const std::size_t a = pilot_pos[i], b = pilot_pos[i + 1];
    for (std::size_t k = a; k < b; ++k) {
      const double t = double(k - a) / double(b - a);
      out[k] = ph[i] * (1.0 - t) + ph[i + 1] * t;
    }
  }
  // wrap-around segment: between the last and (first + n) pilot
  const std::size_t a = pilot_pos.back(), b = pilot_pos.front() + n;
  const double pa = ph.back();
  const double pb = pa + wrap_phase(ph.front() - pa);
  for (std::size_t k = a; k < b && k < n + pilot_pos.front(); ++k) {
    const double t = double(k - a) / double(b - a);
    out[k % n] = pa * (1.0 - t) + pb * t;
  }
  return out;
}

}  // namespace detail

struct DspResult {
  SymbolFrame equalized;            // aligned to tx, same pilot mask
  std::vector<cplx> residual_data;  // y - x over data symbols, both pols
  SnrEstimate snr;
};

// full receiver for the channel of interest (centered at 0 Hz): CDC, matched
// RRC filter, symbol-rate sampling, CPR, least-squares complex scale
inline DspResult receiver_dsp(const Waveform& rx, const LinkConfig& link, const CprConfig& cpr,
                              const SymbolFrame& tx) {
  cpr.validate();
  const std::size_t n_sym = tx.size();
  if (rx.size() % n_sym != 0) throw std::invalid_argument("receiver: sample count mismatch");
  const double amp = std::sqrt(link.launch_power_w() * link.symbol_time() /
                               (tx.dual_pol() ? 2.0 : 1.0));

  DspResult out;
  out.equalized.baud_rate = tx.baud_rate;
  out.equalized.amplitude_scale = tx.amplitude_scale;
  out.equalized.pilot_mask = tx.pilot_mask;
  out.equalized.metadata = tx.metadata;

  auto process_pol = [&](const std::vector<cplx>& samples, const std::vector<cplx>& ref)
      -> std::vector<cplx> {
    std::vector<cplx> buf(samples);
    detail::cdc_inplace(buf, link, rx.sample_rate);
    auto sym = detail::matched_filter(buf, n_sym, link.symbol_rate(), link.rrc_rolloff);
    for (auto& s : sym) s /= amp;

    // carrier phase recovery
    switch (cpr.variant) {
      case CprVariant::Mpr: {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < n_sym; ++k) acc += sym[k] * std::conj(ref[k]);
        const double theta = std::arg(acc);
        for (auto& s : sym) s *= std::polar(1.0, -theta);
        break;
      }
      case CprVariant::MovingAverage: {
        std::vector<double> theta(n_sym);
        for (std::size_t k = 0; k < n_sym; ++k) theta[k] = std::arg(sym[k] * std::conj(ref[k]));
        const auto est = detail::moving_average_phase(theta, cpr.n_cpr);
        for (std::size_t k = 0; k < n_sym; ++k) sym[k] *= std::polar(1.0, -est[k]);
        break;
      }
      case CprVariant::Lpa: {
        std::vector<cplx> rot;
        std::vector<std::size_t> pos;
        for (std::size_t k = 0; k < n_sym; ++k) {
          if (!tx.pilot_mask[k]) continue;
          pos.push_back(k);
          rot.push_back(sym[k] * std::conj(ref[k]));
        }
        // smooth per-pilot rotations over neighbouring pilots (circular)
        std::vector<double> pl(rot.size());
        const long np = long(rot.size());
        for (long i = 0; i < np; ++i) {
          cplx acc = 0.0;
          for (long m = -cpr.lpa_pilot_halfwin; m <= cpr.lpa_pilot_halfwin; ++m)
            acc += rot[std::size_t(((i + m) % np + np) % np)];
          pl[std::size_t(i)] = std::arg(acc);
        }
        const auto est = detail::lpa_phase(pl, pos, n_sym);
        for (std::size_t k = 0; k < n_sym; ++k) sym[k] *= std::polar(1.0, -est[k]);
        break;
      }
    }

    // least-squares complex scale minimizing ||x - a y||^2
    cplx num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < n_sym; ++k) {
      num += std::conj(sym[k]) * ref[k];
      den += std::norm(sym[k]);
    }
    const cplx a = num / den;
    for (auto& s : sym) s *= a;
    return sym;
  };

  out.equalized.x = process_pol(rx.x, tx.x);
  if (tx.dual_pol()) {
    if (!rx.dual_pol()) throw std::invalid_argument("receiver: missing y polarization");
    out.equalized.y = process_pol(rx.y, tx.y);
  }
  for (std::size_t k = 0; k < n_sym; ++k) {
    if (tx.pilot_mask[k]) continue;
    out.residual_data.push_back(out.equalized.x[k] - tx.x[k]);
    if (tx.dual_pol()) out.residual_data.push_back(out.equalized.y[k] - tx.y[k]);
  }
  out.snr = measure_effective_snr(tx, out.equalized);
  return out;
}

}  // namespace shapinglab
