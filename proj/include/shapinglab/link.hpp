// Link and receiver configuration. JSON fields use engineering units
// (km, dB/km, ps/nm/km, GBd, GHz, dBm); accessors convert to SI.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace shapinglab {

constexpr double kSpeedOfLight = 2.99792458e8;   // m/s
constexpr double kPlanck = 6.62607015e-34;       // J s

struct LinkConfig {
  double span_length_km = 80.0;
  int n_spans = 20;
  double alpha_db_per_km = 0.2;
  double dispersion_ps_nm_km = 17.0;
  double gamma_per_w_km = 1.37;
  double noise_figure_db = 6.0;
  double center_wavelength_nm = 1550.0;
  double symbol_rate_gbd = 32.0;
  double channel_spacing_ghz = 50.0;
  int n_channels = 11;
  double rrc_rolloff = 0.1;
  int samples_per_symbol = 8;
  double launch_power_dbm = 0.0;  // per WDM channel
  bool dual_pol = false;

  // derived quantities, SI
  double span_m() const { return span_length_km * 1e3; }
  double total_length_m() const { return span_m() * n_spans; }
  double alpha_np_per_m() const { return alpha_db_per_km * std::log(10.0) / 10.0 / 1e3; }
  double gamma_si() const {
    // Manakov factor 8/9 for dual-polarization propagation
    return gamma_per_w_km * 1e-3 * (dual_pol ? 8.0 / 9.0 : 1.0);
  }
  double beta2_si() const {  // s^2/m, anomalous dispersion is negative
    const double lambda = center_wavelength_nm * 1e-9;
    const double d = dispersion_ps_nm_km * 1e-6;  // s/m^2
    return -d * lambda * lambda / (2.0 * M_PI * kSpeedOfLight);
  }
  double symbol_rate() const { return symbol_rate_gbd * 1e9; }
  double symbol_time() const { return 1.0 / symbol_rate(); }
  double channel_spacing() const { return channel_spacing_ghz * 1e9; }
  double launch_power_w() const { return 1e-3 * std::pow(10.0, launch_power_dbm / 10.0); }
  double carrier_freq() const { return kSpeedOfLight / (center_wavelength_nm * 1e-9); }
  double span_gain_linear() const { return std::exp(alpha_np_per_m() * span_m()); }
  // one-sided ASE PSD per polarization injected by one amplifier, W/Hz
  double ase_psd_per_amp() const {
    const double nf = std::pow(10.0, noise_figure_db / 10.0);
    return 0.5 * nf * (span_gain_linear() - 1.0) * kPlanck * carrier_freq();
  }

  void validate() const {
    if (n_spans < 1) throw std::invalid_argument("link: need at least one span");
    if (n_channels < 1 || n_channels % 2 == 0)
      throw std::invalid_argument("link: channel count must be odd (channel of interest centered)");
    if (samples_per_symbol < 2) throw std::invalid_argument("link: need >= 2 samples per symbol");
    const double min_sps = double(n_channels) * channel_spacing_ghz / symbol_rate_gbd;
    if (double(samples_per_symbol) < min_sps)
      throw std::invalid_argument("link: oversampling below the WDM bandwidth");
    if (rrc_rolloff < 0.0 || rrc_rolloff > 1.0) throw std::invalid_argument("link: bad roll-off");
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"span_length_km", span_length_km},
                          {"n_spans", n_spans},
                          {"alpha_db_per_km", alpha_db_per_km},
                          {"dispersion_ps_nm_km", dispersion_ps_nm_km},
                          {"gamma_per_w_km", gamma_per_w_km},
                          {"noise_figure_db", noise_figure_db},
                          {"center_wavelength_nm", center_wavelength_nm},
                          {"symbol_rate_gbd", symbol_rate_gbd},
                          {"channel_spacing_ghz", channel_spacing_ghz},
                          {"n_channels", n_channels},
                          {"rrc_rolloff", rrc_rolloff},
                          {"samples_per_symbol", samples_per_symbol},
                          {"launch_power_dbm", launch_power_dbm},
                          {"dual_pol", dual_pol}};
  }

  static LinkConfig from_json(const nlohmann::json& j) {
    LinkConfig c;
    c.span_length_km = j.value("span_length_km", c.span_length_km);
    c.n_spans = j.value("n_spans", c.n_spans);
    c.alpha_db_per_km = j.value("alpha_db_per_km", c.alpha_db_per_km);
    c.dispersion_ps_nm_km = j.value("dispersion_ps_nm_km", c.dispersion_ps_nm_km);
    c.gamma_per_w_km = j.value("gamma_per_w_km", c.gamma_per_w_km);
    c.noise_figure_db = j.value("noise_figure_db", c.noise_figure_db);
    c.center_wavelength_nm = j.value("center_wavelength_nm", c.center_wavelength_nm);
    c.symbol_rate_gbd = j.value("symbol_rate_gbd", c.symbol_rate_gbd);
    c.channel_spacing_ghz = j.value("channel_spacing_ghz", c.channel_spacing_ghz);
    c.n_channels = j.value("n_channels", c.n_channels);
    c.rrc_rolloff = j.value("rrc_rolloff", c.rrc_rolloff);
    c.samples_per_symbol = j.value("samples_per_symbol", c.samples_per_symbol);
    c.launch_power_dbm = j.value("launch_power_dbm", c.launch_power_dbm);
    c.dual_pol = j.value("dual_pol", c.dual_pol);
    c.validate();
    return c;
  }

  static LinkConfig load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("link config: cannot open " + path);
    nlohmann::json j;
    is >> j;
    return from_json(j);
  }

  // stable hash over the propagation-relevant fields, for kernel caching
  std::uint64_t hash() const {
    const std::string s = to_json().dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }
};

enum class CprVariant { Mpr, MovingAverage, Lpa };

inline std::string to_string(CprVariant v) {
  switch (v) {
    case CprVariant::Mpr: return "mpr";
    case CprVariant::MovingAverage: return "moving-average";
    case CprVariant::Lpa: return "lpa";
  }
  return "?";
}

struct CprConfig {
  CprVariant variant = CprVariant::Mpr;
  int n_cpr = 0;            // half-window in symbols (moving average)
  double pilot_rate = 0.0;  // LPA
  // LPA: half-window of the circular moving average over pilot phases before
  // interpolation; raw per-pilot estimates are too noisy to interpolate
  int lpa_pilot_halfwin = 1;

  void validate() const {
    if (variant == CprVariant::MovingAverage && n_cpr < 0)
      throw std::invalid_argument("cpr: moving average needs N >= 0");
    if (variant == CprVariant::Lpa && pilot_rate <= 0.0)
      throw std::invalid_argument("cpr: pilot-aided recovery needs a positive pilot rate");
    if (variant == CprVariant::Lpa && lpa_pilot_halfwin < 0)
      throw std::invalid_argument("cpr: pilot smoothing window must be >= 0");
  }
};

struct WindowSizes {
  int w_spm = 0;
  int w_xpm = 0;
  int w_mem = 0;  // one-sided channel memory in symbols
};

// window sizes tied to the channel memory from dispersion and WDM walk-off;
// w_mem uses the one-sided memory convention round(pi |beta2| Rs^2 L)
inline WindowSizes window_sizes(const LinkConfig& link) {
  const double rs = link.symbol_rate();
  const double bch = link.channel_spacing();
  const double b2l = std::abs(link.beta2_si()) * link.total_length_m();
  WindowSizes w;
  w.w_spm = int(std::llround(2.0 * rs * bch * b2l));
  w.w_xpm = int(std::llround(2.0 * rs * bch * std::sqrt(double(link.n_channels) * bch / rs) * b2l));
  w.w_mem = int(std::llround(M_PI * rs * rs * b2l));
  return w;
}

}  // namespace shapinglab
