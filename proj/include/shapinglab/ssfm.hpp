// Split-step Fourier propagation of a WDM ensemble plus the matching
// modulator. Frames are treated as circular, so pulse shaping, WDM shifts and
// dispersion are exact on the DFT grid.
//
// Conventions: field envelope A(t, z) with
//   dA/dz = -j (beta2/2) d^2A/dt^2 + j gamma |A|^2 A - (alpha/2) A,
// linear propagator in frequency exp(+j (beta2/2) w^2 z), w = 2 pi f,
// beta2 < 0 for anomalous dispersion. Chromatic dispersion compensation at the
// receiver applies the inverse phase.
//
// Symbol sequences are dimensionless with unit mean energy; the modulator
// scales by sqrt(P T) per channel so waveform samples carry physical watts.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "shapinglab/fft.hpp"
#include "shapinglab/link.hpp"
#include "shapinglab/pas.hpp"
#include "shapinglab/rng.hpp"

namespace shapinglab {

struct Waveform {
  std::vector<cplx> x;
  std::vector<cplx> y;  // empty for single polarization
  double sample_rate = 0.0;
  double symbol_rate = 0.0;
  bool dual_pol() const { return !y.empty(); }
  std::size_t size() const { return x.size(); }
};

// root-raised-cosine spectrum value at frequency f, normalized so the pulse
// has unit energy (G(0) = T)
inline double rrc_spectrum(double f, double symbol_rate, double rolloff) {
  const double t = 1.0 / symbol_rate;
  const double af = std::abs(f);
  const double f1 = 0.5 * (1.0 - rolloff) * symbol_rate;
  const double f2 = 0.5 * (1.0 + rolloff) * symbol_rate;
  if (af <= f1) return std::sqrt(t);
  if (af >= f2 || rolloff <= 0.0) return 0.0;
  const double c = std::cos(M_PI / (2.0 * rolloff) * (af / symbol_rate - 0.5 * (1.0 - rolloff)));
  return std::sqrt(t * c * c);
}

namespace detail {

// pulse-shape one symbol stream to samples (continuous-field normalization,
// mean power E|x|^2 / T)
inline std::vector<cplx> shape_symbols(const std::vector<cplx>& symbols, int sps, double symbol_rate,
                                       double rolloff) {
  const std::size_t n_sym = symbols.size();
  const std::size_t n = n_sym * std::size_t(sps);
  if (!is_pow2(n)) throw std::invalid_argument("shape_symbols: sample count must be a power of two");
  std::vector<cplx> sym_dft(symbols);
  FftPlan sym_plan(n_sym);
  sym_plan.forward(sym_dft.data());
  const double dt = 1.0 / (symbol_rate * sps);
  const double fs = symbol_rate * sps;
  std::vector<cplx> big(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = fft_bin_freq(i, n, fs);
    const double g = rrc_spectrum(f, symbol_rate, rolloff);
    big[i] = g > 0.0 ? sym_dft[i % n_sym] * (g / dt) : cplx(0.0);
  }
  FftPlan plan(n);
  plan.inverse(big.data());
  return big;
}

// matched filter + symbol-rate sampling, inverse of shape_symbols
inline std::vector<cplx> matched_filter(const std::vector<cplx>& samples, std::size_t n_sym,
                                        double symbol_rate, double rolloff) {
  const std::size_t n = samples.size();
  const int sps = int(n / n_sym);
  const double fs = symbol_rate * sps;
  std::vector<cplx> buf(samples);
  FftPlan plan(n);
  plan.forward(buf.data());
  const double dt = 1.0 / fs;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = fft_bin_freq(i, n, fs);
    buf[i] *= rrc_spectrum(f, symbol_rate, rolloff) * dt;
  }
  plan.inverse(buf.data());
  std::vector<cplx> out(n_sym);
  for (std::size_t k = 0; k < n_sym; ++k) out[k] = buf[k * std::size_t(sps)] / dt;
  return out;
}

// circular spectral shift by an integer number of bins
inline void shift_bins(std::vector<cplx>& v, long bins) {
  if (bins == 0) return;
  FftPlan plan(v.size());
  plan.forward(v.data());
  std::vector<cplx> out(v.size());
  const long n = long(v.size());
  for (long i = 0; i < n; ++i) out[std::size_t(((i + bins) % n + n) % n)] = v[std::size_t(i)];
  plan.inverse(out.data());
  v = std::move(out);
}

}  // namespace detail

// frequency offset of WDM channel index (0 = channel of interest, centered)
inline double channel_offset_hz(const LinkConfig& link, int channel) {
  return double(channel) * link.channel_spacing();
}

// integer DFT bin count of a channel shift; throws when the grid cannot
// represent the offset exactly
inline long channel_shift_bins(const LinkConfig& link, int channel, std::size_t n_samples) {
  const double fs = link.symbol_rate() * link.samples_per_symbol;
  const double bins = channel_offset_hz(link, channel) * double(n_samples) / fs;
  const long b = std::lround(bins);
  if (std::abs(bins - double(b)) > 1e-6)
    throw std::invalid_argument("WDM offset not representable on the DFT grid; adjust frame length");
  return b;
}

// multiplex per-channel frames (channel index 0 .. n_channels-1 maps to
// offsets -(N-1)/2 .. +(N-1)/2 times the spacing) into one physical waveform
inline Waveform modulate_wdm(const std::vector<const SymbolFrame*>& frames, const LinkConfig& link) {
  if (int(frames.size()) != link.n_channels)
    throw std::invalid_argument("modulate_wdm: need one frame per WDM channel");
  const std::size_t n_sym = frames[0]->size();
  for (const auto* f : frames)
    if (f->size() != n_sym || f->dual_pol() != frames[0]->dual_pol())
      throw std::invalid_argument("modulate_wdm: frames must share length and polarization count");
  const int sps = link.samples_per_symbol;
  const double amp = std::sqrt(link.launch_power_w() * link.symbol_time() /
                               (frames[0]->dual_pol() ? 2.0 : 1.0));
  Waveform w;
  w.sample_rate = link.symbol_rate() * sps;
  w.symbol_rate = link.symbol_rate();
  w.x.assign(n_sym * std::size_t(sps), cplx(0.0));
  if (frames[0]->dual_pol()) w.y.assign(n_sym * std::size_t(sps), cplx(0.0));
  for (int ch = 0; ch < link.n_channels; ++ch) {
    const int rel = ch - (link.n_channels - 1) / 2;
    const long bins = channel_shift_bins(link, rel, w.x.size());
    auto add_pol = [&](const std::vector<cplx>& sym, std::vector<cplx>& acc) {
      auto s = detail::shape_symbols(sym, sps, link.symbol_rate(), link.rrc_rolloff);
      detail::shift_bins(s, bins);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += amp * s[i];
    };
    add_pol(frames[std::size_t(ch)]->x, w.x);
    if (frames[0]->dual_pol()) add_pol(frames[std::size_t(ch)]->y, w.y);
  }
  return w;
}

struct SsfmOptions {
  bool noise_on = true;
  double max_step_phase_rad = 1e-3;  // per-step nonlinear phase budget
  int min_steps_per_span = 4;
  // power assumed when sizing steps; 0 = use the waveform's own average power
  double step_sizing_power_w = 0.0;
};

// propagate in place across all spans; deterministic for a given seed
inline void ssfm_propagate(Waveform& w, const LinkConfig& link, std::uint64_t seed,
                           const SsfmOptions& opt = {}) {
  const std::size_t n = w.size();
  FftPlan plan(n);
  const double alpha = link.alpha_np_per_m();
  const double beta2 = link.beta2_si();
  const double gamma = link.gamma_si();
  const double span = link.span_m();

  // average power for step sizing
  double p_avg = opt.step_sizing_power_w;
  if (p_avg <= 0.0) {
    double acc = 0.0;
    for (const auto& v : w.x) acc += std::norm(v);
    if (w.dual_pol())
      for (const auto& v : w.y) acc += std::norm(v);
    p_avg = acc / double(n);
  }
  const double l_eff_span = alpha > 0.0 ? (1.0 - std::exp(-alpha * span)) / alpha : span;
  const double phi_span = gamma * p_avg * l_eff_span;
  const int n_steps =
      std::max(opt.min_steps_per_span, int(std::ceil(phi_span / opt.max_step_phase_rad)));

  // step boundaries split the span's effective length evenly (logarithmic
  // spacing under loss)
  std::vector<double> bounds(std::size_t(n_steps) + 1);
  bounds[0] = 0.0;
  for (int j = 1; j <= n_steps; ++j) {
    const double frac = double(j) / n_steps;
    bounds[std::size_t(j)] =
        alpha > 0.0 ? -std::log(1.0 - frac * (1.0 - std::exp(-alpha * span))) / alpha : frac * span;
  }

  std::vector<double> freq2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double wfreq = 2.0 * M_PI * fft_bin_freq(i, n, w.sample_rate);
    freq2[i] = wfreq * wfreq;
  }

  auto linear_halfstep = [&](std::vector<cplx>& pol, double dz) {
    plan.forward(pol.data());
    const double latt = std::exp(-alpha * dz / 4.0);  // amplitude loss for dz/2
    for (std::size_t i = 0; i < n; ++i) {
      const double phase = 0.5 * beta2 * freq2[i] * (dz / 2.0);
      pol[i] *= std::polar(latt, phase);
    }
    plan.inverse(pol.data());
  };

  Rng noise(seed);
  const double gain_amp = std::exp(alpha * span / 2.0);
  const double sigma2 = link.ase_psd_per_amp() * w.sample_rate;  // per complex sample, per pol

  for (int s = 0; s < link.n_spans; ++s) {
    for (int j = 0; j < n_steps; ++j) {
      const double dz = bounds[std::size_t(j) + 1] - bounds[std::size_t(j)];
      // nonlinear factor referenced to mid-step power: 2 sinh(alpha dz/2)/alpha
      const double xi = alpha > 0.0 ? 2.0 * std::sinh(alpha * dz / 2.0) / alpha : dz;
      linear_halfstep(w.x, dz);
      if (w.dual_pol()) linear_halfstep(w.y, dz);
      if (w.dual_pol()) {
        for (std::size_t i = 0; i < n; ++i) {
          const double p = std::norm(w.x[i]) + std::norm(w.y[i]);
          const cplx rot = std::polar(1.0, gamma * xi * p);
          w.x[i] *= rot;
          w.y[i] *= rot;
        }
      } else {
        for (std::size_t i = 0; i < n; ++i)
          w.x[i] *= std::polar(1.0, gamma * xi * std::norm(w.x[i]));
      }
      linear_halfstep(w.x, dz);
      if (w.dual_pol()) linear_halfstep(w.y, dz);
    }
    // EDFA: gain equals span loss, ASE added per polarization
    for (auto& v : w.x) v *= gain_amp;
    for (auto& v : w.y) v *= gain_amp;
    if (opt.noise_on) {
      const double s1 = std::sqrt(sigma2 / 2.0);
      for (auto& v : w.x) v += cplx(s1 * noise.normal(), s1 * noise.normal());
      for (auto& v : w.y) v += cplx(s1 * noise.normal(), s1 * noise.normal());
    }
  }
  for (const auto& v : w.x)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::runtime_error("ssfm: non-finite sample (power too high for the step budget?)");
}

// waveform dump, little-endian f64 interleaved re/im per polarization
inline void write_waveform(const Waveform& w, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_waveform: cannot open " + path);
  const std::uint64_t n = w.size();
  const std::uint8_t pols = w.dual_pol() ? 2 : 1;
  os.write("SLWAVE01", 8);
  os.write(reinterpret_cast<const char*>(&n), 8);
  os.write(reinterpret_cast<const char*>(&pols), 1);
  os.write(reinterpret_cast<const char*>(&w.sample_rate), 8);
  os.write(reinterpret_cast<const char*>(&w.symbol_rate), 8);
  auto dump = [&](const std::vector<cplx>& v) {
    for (const auto& s : v) {
      const double re = s.real(), im = s.imag();
      os.write(reinterpret_cast<const char*>(&re), 8);
      os.write(reinterpret_cast<const char*>(&im), 8);
    }
  };
  dump(w.x);
  if (pols == 2) dump(w.y);
}

}  // namespace shapinglab
