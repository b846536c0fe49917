// First-order time-domain perturbation model of the fiber channel.
//
// Pulse-matched coefficients C(m, n, s) are evaluated by frequency-domain
// quadrature of the triple-pulse overlap integral along the accumulated
// dispersion trajectory, summed coherently across spans:
//
//   C(m,n,s) = kappa_s int dz f(z) int dt  g_z(t - mT) g_z*(t)
//                                          g_z(t + tau_s(z) - nT) g_z*(t + tau_s(z) - (m+n)T)
//
// with f(z) the power profile (reset at each amplifier), tau_s(z) the WDM
// walk-off, and kappa_s = 2 for s != 0 (cross-channel terms carry the XPM
// doubling). The inner integral reduces to an autocorrelation of
// r_m(t) = g_z(t - mT) g_z*(t), so one FFT per (z, m) yields every n at once.
//
// Stored coefficients are dimensionless: they include the launch scale
// gamma * P * T, so with unit-energy symbol sequences
//   dx_k = j sum_{m,n,s} C(m,n,s) x_{m+k,0} x_{n+k,s} x*_{m+n+k,s}.
// The real taps h_{n,s} = Re C(0,-n,s) then drive the phase-noise filter
// model d_k = sum_s ((e_s - 1) * h_s)_k directly.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shapinglab/fft.hpp"
#include "shapinglab/link.hpp"
#include "shapinglab/ssfm.hpp"
#include "shapinglab/stats.hpp"
#include "shapinglab/threadpool.hpp"

namespace shapinglab {

enum class PulseModel { RrcNumeric, GaussianClosedForm };

struct KernelConfig {
  int w_mem = 0;               // one-sided memory in symbols; 0 = from window_sizes
  int channels_each_side = 0;  // interfering channels per side (0 = SPM only)
  int grid_sps = 8;            // samples per symbol on the quadrature grid
  int z_nodes_per_span = 32;   // Gauss-Legendre nodes per span
  PulseModel pulse = PulseModel::RrcNumeric;
  bool taps_only = false;      // compute only the m = 0 row (filter model)
};

class PerturbationKernel {
 public:
  double gamma_si = 0.0;       // 1/(W m), Manakov factor included
  double symbol_energy = 0.0;  // P T per polarization, J
  int w_mem = 0;
  std::vector<int> channels;   // relative indices, e.g. {-1, 0, 1}
  // dense (2w+1)^2 per channel, row-major over (m + w, n + w)
  std::vector<std::vector<cplx>> coeffs;

  int side() const { return 2 * w_mem + 1; }

  int channel_slot(int s_rel) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
      if (channels[i] == s_rel) return int(i);
    throw std::invalid_argument("kernel: channel not computed");
  }

  cplx coeff(int s_rel, int m, int n) const {
    if (std::abs(m) > w_mem || std::abs(n) > w_mem) return 0.0;
    return coeffs[std::size_t(channel_slot(s_rel))][std::size_t((m + w_mem) * side() + (n + w_mem))];
  }

  // real filter taps h_n = Re C(0, -n), n in [-w_mem, w_mem]
  std::vector<double> taps(int s_rel) const {
    std::vector<double> h(std::size_t(side()), 0.0);
    for (int n = -w_mem; n <= w_mem; ++n)
      h[std::size_t(n + w_mem)] = coeff(s_rel, 0, -n).real();
    return h;
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("kernel save: cannot open " + path);
    os.write("SLKERN01", 8);
    const std::int32_t w = w_mem, nch = std::int32_t(channels.size());
    os.write(reinterpret_cast<const char*>(&w), 4);
    os.write(reinterpret_cast<const char*>(&nch), 4);
    os.write(reinterpret_cast<const char*>(&gamma_si), 8);
    os.write(reinterpret_cast<const char*>(&symbol_energy), 8);
    for (int c : channels) {
      const std::int32_t ci = c;
      os.write(reinterpret_cast<const char*>(&ci), 4);
    }
    for (const auto& ch : coeffs)
      os.write(reinterpret_cast<const char*>(ch.data()), std::streamsize(ch.size() * sizeof(cplx)));
  }

  static PerturbationKernel load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("kernel load: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::string(magic, 8) != "SLKERN01") throw std::runtime_error("kernel load: bad magic");
    PerturbationKernel k;
    std::int32_t w = 0, nch = 0;
    is.read(reinterpret_cast<char*>(&w), 4);
    is.read(reinterpret_cast<char*>(&nch), 4);
    is.read(reinterpret_cast<char*>(&k.gamma_si), 8);
    is.read(reinterpret_cast<char*>(&k.symbol_energy), 8);
    k.w_mem = w;
    k.channels.resize(std::size_t(nch));
    for (auto& c : k.channels) {
      std::int32_t ci = 0;
      is.read(reinterpret_cast<char*>(&ci), 4);
      c = ci;
    }
    k.coeffs.assign(std::size_t(nch), std::vector<cplx>(std::size_t(k.side()) * k.side()));
    for (auto& ch : k.coeffs)
      is.read(reinterpret_cast<char*>(ch.data()), std::streamsize(ch.size() * sizeof(cplx)));
    if (!is) throw std::runtime_error("kernel load: truncated file");
    return k;
  }
};

namespace detail {

inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  // Newton iteration on Legendre polynomials, nodes in (-1, 1)
  nodes.resize(std::size_t(n));
  weights.resize(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= n; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1.0);
    nodes[std::size_t(i)] = x;
    weights[std::size_t(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

// dispersed pulse on the quadrature grid at accumulated distance z
inline std::vector<cplx> dispersed_pulse(const LinkConfig& link, const KernelConfig& cfg,
                                         std::size_t n, double z_total) {
  const double fs = link.symbol_rate() * cfg.grid_sps;
  const double dt = 1.0 / fs;
  std::vector<cplx> g(n);
  const double t0 = 0.5 / link.symbol_rate();  // gaussian width when selected
  for (std::size_t i = 0; i < n; ++i) {
    const double f = fft_bin_freq(i, n, fs);
    double mag;
    if (cfg.pulse == PulseModel::RrcNumeric) {
      mag = rrc_spectrum(f, link.symbol_rate(), link.rrc_rolloff);
    } else {
      // unit-energy gaussian pulse g(t) = (pi tau^2)^{-1/4} exp(-t^2/(2 tau^2))
      const double tau = 0.4 * t0 * 2.0;  // width matched to the RRC main lobe
      const double s = 2.0 * M_PI * f * tau;
      mag = std::pow(4.0 * M_PI * tau * tau, 0.25) * std::exp(-s * s / 2.0);
    }
    const double w = 2.0 * M_PI * f;
    g[i] = std::polar(mag / dt, 0.5 * link.beta2_si() * w * w * z_total);
  }
  FftPlan plan(n);
  plan.inverse(g.data());
  return g;
}

}  // namespace detail

inline PerturbationKernel compute_coefficients(const LinkConfig& link, KernelConfig cfg = {}) {
  if (cfg.w_mem <= 0) cfg.w_mem = std::max(1, window_sizes(link).w_mem);
  const int w = cfg.w_mem;
  const int side = 2 * w + 1;
  const double t_sym = link.symbol_time();
  const double fs = link.symbol_rate() * cfg.grid_sps;
  const double dt = 1.0 / fs;

  // grid must hold the dispersed pulse plus the largest symbol shift
  const double spread_s =
      2.0 * M_PI * (0.55 * (1.0 + link.rrc_rolloff) * link.symbol_rate()) *
      std::abs(link.beta2_si()) * link.total_length_m();
  const int margin_sym = int(spread_s / t_sym) + w + 16;
  std::size_t n = 1;
  while (n < std::size_t(2 * margin_sym) * std::size_t(cfg.grid_sps)) n <<= 1;

  PerturbationKernel kernel;
  kernel.gamma_si = link.gamma_si();
  kernel.symbol_energy = link.launch_power_w() * t_sym / (link.dual_pol ? 2.0 : 1.0);
  kernel.w_mem = w;
  for (int s = -cfg.channels_each_side; s <= cfg.channels_each_side; ++s)
    kernel.channels.push_back(s);
  kernel.coeffs.assign(kernel.channels.size(),
                       std::vector<cplx>(std::size_t(side) * side, cplx(0.0)));

  std::vector<double> gl_nodes, gl_weights;
  detail::gauss_legendre(cfg.z_nodes_per_span, gl_nodes, gl_weights);
  const double span = link.span_m();
  const double alpha = link.alpha_np_per_m();

  struct ZNode {
    double z_total;
    double weight;  // quadrature weight including the power profile
  };
  std::vector<ZNode> znodes;
  for (int sp = 0; sp < link.n_spans; ++sp)
    for (int q = 0; q < cfg.z_nodes_per_span; ++q) {
      const double zeta = 0.5 * span * (gl_nodes[std::size_t(q)] + 1.0);
      znodes.push_back({sp * span + zeta,
                        0.5 * span * gl_weights[std::size_t(q)] * std::exp(-alpha * zeta)});
    }

  const int m_lo = cfg.taps_only ? 0 : -w;
  const int m_hi = cfg.taps_only ? 0 : w;

  // z nodes are distributed over workers; each worker owns an accumulator
  const std::size_t n_workers = std::min<std::size_t>(worker_count(), znodes.size());
  std::vector<std::vector<std::vector<cplx>>> partial(
      n_workers,
      std::vector<std::vector<cplx>>(kernel.channels.size(),
                                     std::vector<cplx>(std::size_t(side) * side, cplx(0.0))));
  parallel_for(n_workers, [&](std::size_t wi) {
    FftPlan plan(n);
    std::vector<cplx> r(n), q(n), qs(n);
    for (std::size_t zi = wi; zi < znodes.size(); zi += n_workers) {
      const auto& zn = znodes[zi];
      const auto g = detail::dispersed_pulse(link, cfg, n, zn.z_total);
      for (int m = m_lo; m <= m_hi; ++m) {
        // r_m(t) = g(t - mT) g*(t); shifts are circular on the periodic grid
        const long shift = long(m) * cfg.grid_sps;
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t j = std::size_t((long(i) - shift % long(n) + long(n)) % long(n));
          r[i] = g[j] * std::conj(g[i]);
        }
        plan.forward(r.data());
        for (std::size_t i = 0; i < n; ++i) q[i] = r[i] * std::conj(r[i]);
        for (std::size_t ci = 0; ci < kernel.channels.size(); ++ci) {
          const int s = kernel.channels[ci];
          qs = q;
          if (s != 0) {
            // walk-off delay tau = beta2 * Omega_s * z enters as a spectral phase
            const double tau =
                link.beta2_si() * 2.0 * M_PI * s * link.channel_spacing() * zn.z_total;
            for (std::size_t i = 0; i < n; ++i) {
              const double f = fft_bin_freq(i, n, fs);
              qs[i] *= std::polar(1.0, -2.0 * M_PI * f * tau);
            }
          }
          plan.inverse(qs.data());
          const double kappa = s == 0 ? 1.0 : 2.0;
          for (int nn = -w; nn <= w; ++nn) {
            const std::size_t u =
                std::size_t((long(nn) * cfg.grid_sps % long(n) + long(n)) % long(n));
            partial[wi][ci][std::size_t((m + w) * side + (nn + w))] +=
                kappa * zn.weight * dt * qs[u];
          }
        }
      }
    }
  });
  for (std::size_t wi = 0; wi < n_workers; ++wi)
    for (std::size_t ci = 0; ci < kernel.channels.size(); ++ci)
      for (std::size_t i = 0; i < kernel.coeffs[ci].size(); ++i)
        kernel.coeffs[ci][i] += partial[wi][ci][i];

  // dimensionless scaling gamma * P * T (per-polarization symbol energy)
  const double scale = kernel.gamma_si * kernel.symbol_energy;
  for (auto& ch : kernel.coeffs)
    for (auto& c : ch) c *= scale;

  if (cfg.taps_only) {
    // mirror the m = 0 row into the (n, 0) column so coeff() stays symmetric
    for (auto& ch : kernel.coeffs)
      for (int nn = -w; nn <= w; ++nn)
        ch[std::size_t((nn + w) * side + w)] = ch[std::size_t(w * side + (nn + w))];
  }
  return kernel;
}

// ---------------------------------------------------------------------------
// filter model

struct FilterResponse {
  std::vector<double> freq;  // cycles/symbol, [0, 0.5]
  std::vector<double> mag;   // |H(f)|
  double bandwidth_3db = 0.0;
};

inline FilterResponse frequency_response(std::span<const double> taps, int n_freq = 4096) {
  FilterResponse r;
  const int half = int(taps.size() / 2);
  r.freq.resize(std::size_t(n_freq) + 1);
  r.mag.resize(std::size_t(n_freq) + 1);
  for (int i = 0; i <= n_freq; ++i) {
    const double f = 0.5 * double(i) / n_freq;
    cplx acc = 0.0;
    for (int nn = -half; nn <= half; ++nn)
      acc += taps[std::size_t(nn + half)] * std::polar(1.0, -2.0 * M_PI * f * nn);
    r.freq[std::size_t(i)] = f;
    r.mag[std::size_t(i)] = std::abs(acc);
  }
  const double ref = r.mag[0] / std::sqrt(2.0);
  r.bandwidth_3db = 0.5;
  for (std::size_t i = 1; i < r.mag.size(); ++i) {
    if (r.mag[i] <= ref) {
      // linear interpolation between grid points
      const double f0 = r.freq[i - 1], f1 = r.freq[i];
      const double m0 = r.mag[i - 1], m1 = r.mag[i];
      r.bandwidth_3db = f0 + (ref - m0) / (m1 - m0) * (f1 - f0);
      break;
    }
  }
  return r;
}

inline FilterResponse filter_response(const PerturbationKernel& k, int s_rel = 0) {
  const auto h = k.taps(s_rel);
  return frequency_response(h);
}

// phase-noise NLIN d_k = sum_s ((e_s - 1) * h_s)_k; energies normalized to
// unit mean, sequences circular, one sequence per kernel channel
inline std::vector<double> phase_noise_nlin(const PerturbationKernel& k,
                                            const std::vector<std::span<const double>>& energies) {
  if (energies.size() != k.channels.size())
    throw std::invalid_argument("phase_noise_nlin: need one energy sequence per channel");
  const std::size_t n = energies[0].size();
  for (const auto& e : energies)
    if (e.size() != n) throw std::invalid_argument("phase_noise_nlin: length mismatch");
  std::vector<double> d(n, 0.0);
  for (std::size_t ci = 0; ci < energies.size(); ++ci) {
    const auto h = k.taps(k.channels[ci]);
    const int half = k.w_mem;
    for (std::size_t kk = 0; kk < n; ++kk) {
      double acc = 0.0;
      for (int nn = -half; nn <= half; ++nn) {
        const std::size_t idx = std::size_t((long(kk) - nn % long(n) + long(n)) % long(n));
        acc += (energies[ci][idx] - 1.0) * h[std::size_t(nn + half)];
      }
      d[kk] += acc;
    }
  }
  return d;
}

// CPR filter u_m = delta_m - 1/(2N+1) on |m| <= N; exact DC null by
// construction
inline std::vector<double> cpr_filter(int n_cpr) {
  if (n_cpr < 0) throw std::invalid_argument("cpr_filter: N must be >= 0");
  const int len = 2 * n_cpr + 1;
  std::vector<double> u(std::size_t(len), -1.0 / double(len));
  u[std::size_t(n_cpr)] += 1.0;
  return u;
}

// residual phase-noise NLIN after the moving-average CPR:
//   dd = sum_s (e_s - 1) * u * h_s   (CPR noise excluded)
inline std::vector<double> residual_after_cpr(const PerturbationKernel& k,
                                              const std::vector<std::span<const double>>& energies,
                                              int n_cpr) {
  auto d = phase_noise_nlin(k, energies);
  if (n_cpr == 0) return std::vector<double>(d.size(), 0.0);
  const auto u = cpr_filter(n_cpr);
  const std::size_t n = d.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t kk = 0; kk < n; ++kk) {
    double acc = 0.0;
    for (int m = -n_cpr; m <= n_cpr; ++m) {
      const std::size_t idx = std::size_t((long(kk) - m % long(n) + long(n)) % long(n));
      acc += u[std::size_t(m + n_cpr)] * d[idx];
    }
    out[kk] = acc;
  }
  return out;
}

// full pulse-matched prediction dx_k = j sum_{m,n,s} C x x x* on unit-energy
// frames, circular indexing; channel sequences aligned with kernel.channels
inline std::vector<cplx> predict_nlin(const PerturbationKernel& k,
                                      const std::vector<std::span<const cplx>>& frames) {
  if (frames.size() != k.channels.size())
    throw std::invalid_argument("predict_nlin: need one frame per kernel channel");
  const std::size_t n = frames[0].size();
  const long ln = long(n);
  const int w = k.w_mem;
  std::vector<cplx> dx(n, cplx(0.0));
  const int coi = k.channel_slot(0);
  auto wrap = [&](long i) { return std::size_t((i % ln + ln) % ln); };
  for (std::size_t ci = 0; ci < frames.size(); ++ci) {
    const auto& cs = k.coeffs[ci];
    const auto& xs = frames[std::size_t(coi)];
    const auto& xn = frames[ci];
    for (std::size_t kk = 0; kk < n; ++kk) {
      cplx acc = 0.0;
      for (int m = -w; m <= w; ++m) {
        const cplx xm = xs[wrap(long(kk) + m)];
        const std::size_t row = std::size_t(m + w) * std::size_t(2 * w + 1);
        for (int nn = -w; nn <= w; ++nn) {
          const cplx c = cs[row + std::size_t(nn + w)];
          if (c == cplx(0.0)) continue;
          acc += c * xm * xn[wrap(long(kk) + nn)] * std::conj(xn[wrap(long(kk) + m + nn)]);
        }
      }
      dx[kk] += cplx(0.0, 1.0) * acc;
    }
  }
  return dx;
}

// least-squares multiplicative filter learning: find taps minimizing
// || phi - (e - 1) * h ||^2 over a circular frame, h of length 2*half+1
inline std::vector<double> fit_overall_filter(std::span<const double> residual_phase,
                                              std::span<const double> energies, int half) {
  const std::size_t n = residual_phase.size();
  if (energies.size() != n) throw std::invalid_argument("fit_overall_filter: length mismatch");
  if (n < std::size_t(4 * half + 8))
    throw std::invalid_argument("fit_overall_filter: sequence too short");
  const int p = 2 * half + 1;
  const double ebar = mean(energies);
  const double pbar = mean(residual_phase);
  // normal equations built from circular correlations
  std::vector<double> e0(n), y0(n);
  for (std::size_t i = 0; i < n; ++i) {
    e0[i] = energies[i] - ebar;
    y0[i] = residual_phase[i] - pbar;
  }
  auto ecorr = [&](long lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += e0[i] * e0[std::size_t((long(i) + lag % long(n) + long(n)) % long(n))];
    return acc;
  };
  std::vector<double> rx(std::size_t(2 * p) + 1);
  for (int lag = -p; lag <= p; ++lag) rx[std::size_t(lag + p)] = ecorr(lag);
  std::vector<double> xtx(std::size_t(p) * p, 0.0), xty(std::size_t(p), 0.0);
  for (int a = -half; a <= half; ++a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += y0[i] * e0[std::size_t((long(i) - a % long(n) + long(n)) % long(n))];
    xty[std::size_t(a + half)] = acc;
    for (int b = -half; b <= half; ++b)
      xtx[std::size_t(a + half) * std::size_t(p) + std::size_t(b + half)] =
          rx[std::size_t((a - b) + p)];
  }
  // rank-deficiency shows up as a non-positive pivot in the Cholesky solve
  return solve_spd(std::move(xtx), std::move(xty));
}

}  // namespace shapinglab
