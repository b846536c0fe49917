// Config-driven experiment runner: sources, link sweeps, selection studies,
// CSV/JSON emitters and a regression comparator. Every preset is deterministic
// for a given seed; all randomness flows from the config seed.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shapinglab/air.hpp"
#include "shapinglab/egn.hpp"
#include "shapinglab/gnfit.hpp"
#include "shapinglab/matcher.hpp"
#include "shapinglab/pas.hpp"
#include "shapinglab/perturbation.hpp"
#include "shapinglab/rxdsp.hpp"
#include "shapinglab/selection.hpp"
#include "shapinglab/ssfm.hpp"
#include "shapinglab/threadpool.hpp"
#include "shapinglab/windowed.hpp"

namespace shapinglab {

// desk-scale link: trends of the full system reproduced at 4 spans, 3 channels
inline LinkConfig scaled_link() {
  LinkConfig l;
  l.n_spans = 4;
  l.n_channels = 3;
  l.samples_per_symbol = 8;
  return l;
}

inline LinkConfig single_channel_link() {
  LinkConfig l = scaled_link();
  l.n_channels = 1;
  l.samples_per_symbol = 4;
  return l;
}

// ---------------------------------------------------------------------------
// symbol sources

struct SourceSpec {
  enum class Kind { Ccdm, Ess, Kess, IidMb, IidUniform };
  Kind kind = Kind::IidMb;
  int block_length = 32;
  double rate = 1.5;  // bits per amplitude
  std::vector<int> levels{1, 3, 5, 7};
  MappingKind mapping = MappingKind::Dim1;

  std::string label() const {
    switch (kind) {
      case Kind::Ccdm: return "ccdm-D" + std::to_string(block_length);
      case Kind::Ess: return "ess-D" + std::to_string(block_length);
      case Kind::Kess: return "kess-D" + std::to_string(block_length);
      case Kind::IidMb: return "iid-mb";
      case Kind::IidUniform: return "iid-uniform";
    }
    return "?";
  }
};

// MB parameter hitting a target amplitude entropy, by bisection
inline double mb_lambda_for_entropy(const std::vector<int>& levels, double target_bits) {
  std::vector<double> amps(levels.begin(), levels.end());
  double lo = 0.0, hi = 4.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (entropy_bits(mb_distribution(amps, mid)) > target_bits)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline ShaperSpec shaper_for_source(const SourceSpec& src) {
  ShaperSpec spec;
  spec.block_length = src.block_length;
  spec.levels = src.levels;
  switch (src.kind) {
    case SourceSpec::Kind::Ccdm:
      spec.kind = ShaperKind::Ccdm;
      spec.composition = ccdm_composition_for_rate(src.block_length, src.levels, src.rate);
      break;
    case SourceSpec::Kind::Ess:
      spec.kind = ShaperKind::Ess;
      spec.energy_bound = ess_energy_bound_for_rate(src.block_length, src.levels, src.rate);
      break;
    case SourceSpec::Kind::Kess: {
      spec.kind = ShaperKind::Kess;
      spec.energy_bound = ess_energy_bound_for_rate(src.block_length, src.levels, src.rate);
      spec.fourth_bound = (long long)src.block_length * spec.levels.back() * spec.levels.back() *
                          spec.levels.back() * spec.levels.back();
      break;
    }
    default: throw std::invalid_argument("shaper_for_source: i.i.d. sources have no shaper");
  }
  return spec;
}

inline Constellation iid_constellation(const SourceSpec& src) {
  const int levels_per_dim = int(src.levels.size());
  const int m = 4 * levels_per_dim * levels_per_dim;
  std::vector<double> amp_probs;
  if (src.kind == SourceSpec::Kind::IidUniform) {
    amp_probs.assign(std::size_t(levels_per_dim), 1.0 / levels_per_dim);
  } else {
    std::vector<double> amps(src.levels.begin(), src.levels.end());
    amp_probs = mb_distribution(amps, mb_lambda_for_entropy(src.levels, src.rate));
  }
  return build_qam(m, qam_probs_from_amplitudes(m, amp_probs));
}

// frame of exactly n_sym symbols (n_sym must absorb the pilot grid)
inline SymbolFrame source_frame(const SourceSpec& src, std::size_t n_sym, FrameConfig cfg,
                                std::uint64_t seed) {
  cfg.mapping = src.mapping;
  cfg.sign_seed = seed;
  cfg.pilot_seed = seed ^ 0xabcdef12345ULL;
  if (src.kind == SourceSpec::Kind::IidMb || src.kind == SourceSpec::Kind::IidUniform) {
    const auto c = iid_constellation(src);
    auto f = iid_frame(c, n_sym, cfg);
    f.x.resize(n_sym);
    if (cfg.dual_pol) f.y.resize(n_sym);
    f.pilot_mask.resize(n_sym);
    return f;
  }
  const auto spec = shaper_for_source(src);
  const auto shaper = make_shaper(spec);
  Rng rng(seed);
  const int comps = (cfg.dual_pol ? 4 : 2) / (src.mapping == MappingKind::Dim1 ? 1 : (src.mapping == MappingKind::Dim2 ? 2 : 4));
  const std::size_t amps_needed = n_sym * std::size_t(cfg.dual_pol ? 4 : 2);
  std::size_t n_blocks = amps_needed / std::size_t(spec.block_length) + std::size_t(2 * comps);
  n_blocks = (n_blocks + std::size_t(comps) - 1) / std::size_t(comps) * std::size_t(comps);
  const auto blocks = random_blocks(*shaper, n_blocks, rng);
  auto f = assemble_frame(*shaper, blocks, cfg);
  if (f.size() < n_sym) throw std::logic_error("source_frame: frame shorter than requested");
  f.x.resize(n_sym);
  if (cfg.dual_pol) f.y.resize(n_sym);
  f.pilot_mask.resize(n_sym);
  return f;
}

// ---------------------------------------------------------------------------
// link measurement

struct LinkRun {
  double snr_db = 0.0;
  double p_nlin_w = 0.0;  // residual power in symbol-energy units
};

inline std::vector<SymbolFrame> source_frames_per_channel(const LinkConfig& link,
                                                          const SourceSpec& src,
                                                          const CprConfig& cpr, std::size_t n_sym,
                                                          std::uint64_t seed) {
  FrameConfig fc;
  fc.dual_pol = link.dual_pol;
  fc.pilot_rate = cpr.variant == CprVariant::Lpa ? cpr.pilot_rate : 0.0;
  fc.baud_rate = link.symbol_rate();
  std::vector<SymbolFrame> frames;
  frames.reserve(std::size_t(link.n_channels));
  for (int ch = 0; ch < link.n_channels; ++ch)
    frames.push_back(source_frame(src, n_sym, fc, seed * 1000003ULL + std::uint64_t(ch)));
  return frames;
}

// shuffle data symbols of every channel frame; destroys block structure while
// keeping the exact realized symbol multiset (an "infinite block length"
// reference paired to the shaped frames)
inline std::vector<SymbolFrame> permuted_copy(const std::vector<SymbolFrame>& frames,
                                              std::uint64_t seed) {
  std::vector<SymbolFrame> out;
  out.reserve(frames.size());
  for (std::size_t ch = 0; ch < frames.size(); ++ch) {
    const auto perm = interleave_permutation(frames[ch].data_count(),
                                             seed + 131ULL * std::uint64_t(ch), 1);
    out.push_back(permute_data_symbols(frames[ch], perm));
  }
  return out;
}

inline LinkRun measure_frames_snr(const LinkConfig& link, const std::vector<SymbolFrame>& frames,
                                  const CprConfig& cpr, std::uint64_t seed, bool noise_on = true) {
  std::vector<const SymbolFrame*> ptrs;
  for (const auto& f : frames) ptrs.push_back(&f);
  auto w = modulate_wdm(ptrs, link);
  SsfmOptions opt;
  opt.noise_on = noise_on;
  ssfm_propagate(w, link, seed ^ 0x5eedULL, opt);
  const auto coi = std::size_t(link.n_channels / 2);
  const auto res = receiver_dsp(w, link, cpr, frames[coi]);
  LinkRun out;
  out.snr_db = res.snr.snr_db;
  double p = 0.0;
  for (const auto& r : res.residual_data) p += std::norm(r);
  out.p_nlin_w = p / double(res.residual_data.size());
  return out;
}

inline LinkRun measure_link_snr(const LinkConfig& link, const SourceSpec& src,
                                const CprConfig& cpr, std::size_t n_sym, std::uint64_t seed,
                                bool noise_on = true) {
  return measure_frames_snr(link, source_frames_per_channel(link, src, cpr, n_sym, seed), cpr,
                            seed, noise_on);
}

struct SweepResult {
  std::vector<double> powers_dbm;
  std::vector<double> snr_db_mean;   // over seeds
  std::vector<std::vector<double>> snr_db_per_seed;
  GnFit fit;                          // on seed-averaged linear SNR
  std::vector<double> snr_opt_per_seed_db;
};

inline SweepResult power_sweep(LinkConfig link, const SourceSpec& src, const CprConfig& cpr,
                               std::span<const double> powers_dbm, int n_seeds, std::size_t n_sym,
                               std::uint64_t seed0) {
  SweepResult out;
  out.powers_dbm.assign(powers_dbm.begin(), powers_dbm.end());
  out.snr_db_per_seed.assign(std::size_t(n_seeds), {});
  // run the grid in parallel; results land in preassigned slots
  std::vector<double> snr_flat(powers_dbm.size() * std::size_t(n_seeds), 0.0);
  parallel_for(snr_flat.size(), [&](std::size_t idx) {
    const std::size_t pi = idx / std::size_t(n_seeds);
    const std::size_t si = idx % std::size_t(n_seeds);
    LinkConfig l = link;
    l.launch_power_dbm = powers_dbm[pi];
    snr_flat[idx] =
        measure_link_snr(l, src, cpr, n_sym, seed0 + 17 * si, true).snr_db;
  });
  for (std::size_t pi = 0; pi < powers_dbm.size(); ++pi) {
    double acc = 0.0;
    for (int si = 0; si < n_seeds; ++si) {
      const double v = snr_flat[pi * std::size_t(n_seeds) + std::size_t(si)];
      out.snr_db_per_seed[std::size_t(si)].push_back(v);
      acc += from_db10(v);
    }
    out.snr_db_mean.push_back(db10(acc / n_seeds));
  }
  std::vector<double> pw(powers_dbm.size()), snr_lin(powers_dbm.size());
  for (std::size_t i = 0; i < powers_dbm.size(); ++i) {
    pw[i] = 1e-3 * std::pow(10.0, powers_dbm[i] / 10.0);
    snr_lin[i] = from_db10(out.snr_db_mean[i]);
  }
  out.fit = fit_gn_model(pw, snr_lin);
  for (int si = 0; si < n_seeds; ++si) {
    std::vector<double> s(powers_dbm.size());
    for (std::size_t i = 0; i < powers_dbm.size(); ++i)
      s[i] = from_db10(out.snr_db_per_seed[std::size_t(si)][i]);
    out.snr_opt_per_seed_db.push_back(fit_gn_model(pw, s).optimum_snr_db());
  }
  return out;
}

// ---------------------------------------------------------------------------
// results table

struct SeriesPoint {
  std::string series;
  std::uint64_t seed = 0;
  double x = 0.0;
  double y = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct RunResult {
  std::string preset;
  std::vector<SeriesPoint> points;
  nlohmann::json meta;
};

inline void write_results(const RunResult& r, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/results.csv");
  if (!csv) throw std::runtime_error("cannot write results.csv in " + out_dir);
  csv << "preset,series,seed,x,y,ci_lo,ci_hi\n";
  char buf[256];
  for (const auto& p : r.points) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%llu,%.12g,%.12g,%.12g,%.12g\n", r.preset.c_str(),
                  p.series.c_str(), (unsigned long long)p.seed, p.x, p.y, p.ci_lo, p.ci_hi);
    csv << buf;
  }
  std::ofstream meta(out_dir + "/meta.json");
  meta << r.meta.dump(2) << "\n";
}

inline std::vector<SeriesPoint> read_results_csv(const std::string& path, std::string* preset = nullptr) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty csv: " + path);
  if (line != "preset,series,seed,x,y,ci_lo,ci_hi")
    throw std::runtime_error("schema mismatch in " + path + ": " + line);
  std::vector<SeriesPoint> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    SeriesPoint p;
    std::getline(ss, field, ',');
    if (preset) *preset = field;
    std::getline(ss, p.series, ',');
    std::getline(ss, field, ',');
    p.seed = std::stoull(field);
    std::getline(ss, field, ',');
    p.x = std::stod(field);
    std::getline(ss, field, ',');
    p.y = std::stod(field);
    std::getline(ss, field, ',');
    p.ci_lo = std::stod(field);
    std::getline(ss, field, ',');
    p.ci_hi = std::stod(field);
    out.push_back(std::move(p));
  }
  return out;
}

struct CompareReport {
  bool pass = true;
  std::vector<std::string> failures;
  std::map<std::string, double> max_deviation;  // per series
};

inline CompareReport compare_results(const std::string& baseline_csv, const std::string& run_csv,
                                     double tolerance, bool ci_overlap_mode = false) {
  const auto base = read_results_csv(baseline_csv);
  const auto run = read_results_csv(run_csv);
  std::map<std::pair<std::string, double>, const SeriesPoint*> run_index;
  for (const auto& p : run) run_index[{p.series, p.x}] = &p;
  CompareReport rep;
  for (const auto& b : base) {
    const auto it = run_index.find({b.series, b.x});
    if (it == run_index.end()) {
      rep.pass = false;
      rep.failures.push_back("series " + b.series + ": missing x = " + std::to_string(b.x));
      continue;
    }
    const auto& r = *it->second;
    const double dev = std::abs(r.y - b.y);
    rep.max_deviation[b.series] = std::max(rep.max_deviation[b.series], dev);
    bool ok;
    if (ci_overlap_mode && (b.ci_hi > b.ci_lo || r.ci_hi > r.ci_lo))
      ok = r.ci_lo <= b.ci_hi && b.ci_lo <= r.ci_hi;
    else
      ok = dev <= tolerance;
    if (!ok) {
      rep.pass = false;
      rep.failures.push_back("series " + b.series + " at x = " + std::to_string(b.x) +
                             ": |dy| = " + std::to_string(dev));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// experiment configuration and presets

struct ExperimentConfig {
  std::string preset;
  LinkConfig link = scaled_link();
  std::uint64_t seed = 7;
  std::string out_dir = "results";
  bool full_scale = false;  // use the configured link as-is (hours of runtime)
  int n_seeds = 5;
  std::size_t n_symbols = std::size_t(1) << 13;

  void validate() const {
    if (preset.empty()) throw std::invalid_argument("experiment: preset name required");
    if (n_seeds < 1) throw std::invalid_argument("experiment: need at least one seed");
    link.validate();
  }
};

namespace presets {

inline RunResult rate_loss_moments(const ExperimentConfig& cfg) {
  RunResult r;
  r.preset = "rate-loss-moments";
  Rng rng(cfg.seed);
  const double uni_mu4 = standardized_moments(build_qam(64)).mu4;
  const double uni_mu6 = standardized_moments(build_qam(64)).mu6;
  for (int d : {8, 16, 32, 64, 128, 256}) {
    SourceSpec src;
    src.kind = SourceSpec::Kind::Ess;
    src.block_length = d;
    const auto shaper = make_shaper(shaper_for_source(src));
    const double loss = rate_loss(*shaper);
    const auto im = induced_moments(*shaper, 1, 0, rng);
    r.points.push_back({"rate-loss", cfg.seed, double(d), loss, loss, loss});
    r.points.push_back({"mu4-ratio", cfg.seed, double(d), im.report.mu4 / uni_mu4, 0, 0});
    r.points.push_back({"mu6-ratio", cfg.seed, double(d), im.report.mu6 / uni_mu6, 0, 0});
  }
  return r;
}

inline RunResult filter_response_preset(const ExperimentConfig& cfg) {
  RunResult r;
  r.preset = "filter-response";
  auto emit = [&](const std::string& name, int spans, double gbd) {
    LinkConfig l = cfg.link;
    l.n_spans = spans;
    l.symbol_rate_gbd = gbd;
    l.n_channels = 1;
    l.samples_per_symbol = 4;
    KernelConfig kc;
    kc.taps_only = true;
    kc.w_mem = std::max(24, 2 * window_sizes(l).w_spm);
    const auto resp = filter_response(compute_coefficients(l, kc));
    for (std::size_t i = 0; i < resp.freq.size(); i += 16)
      r.points.push_back({name, cfg.seed, resp.freq[i], resp.mag[i], 0, 0});
    r.points.push_back({"bw3db", cfg.seed, double(spans) * l.span_length_km, resp.bandwidth_3db, 0, 0});
  };
  emit("H-80km-32GBd", 1, 32.0);
  emit("H-320km-32GBd", 4, 32.0);
  emit("H-1600km-32GBd", 20, 32.0);
  return r;
}

inline RunResult psd_ccdm(const ExperimentConfig& cfg) {
  RunResult r;
  r.preset = "psd-ccdm";
  for (int d : {20, 108, 300}) {
    SourceSpec src;
    src.kind = SourceSpec::Kind::Ccdm;
    src.block_length = d;
    const auto shaper = make_shaper(shaper_for_source(src));
    Rng rng(cfg.seed);
    const double mu4 = induced_moments(*shaper, 1, 0, rng).report.mu4;
    const auto rr = ccdm_energy_autocorrelation(d, mu4, d);
    const auto p = psd_from_autocorrelation(rr, 512);
    for (std::size_t i = 0; i < p.freq.size(); i += 4)
      r.points.push_back({"ccdm-D" + std::to_string(d), cfg.seed, p.freq[i], p.s[i], 0, 0});
    r.points.push_back({"dc-null-D" + std::to_string(d), cfg.seed, 0.0, p.s[0], 0, 0});
  }
  return r;
}

inline RunResult psd_shapers(const ExperimentConfig& cfg) {
  RunResult r;
  r.preset = "psd-ess-ccdm";
  for (const auto kind : {SourceSpec::Kind::Ccdm, SourceSpec::Kind::Ess}) {
    for (int d : {16, 64}) {
      SourceSpec src;
      src.kind = kind;
      src.block_length = d;
      const auto shaper = make_shaper(shaper_for_source(src));
      Rng rng(cfg.seed + d);
      const auto blocks = uniform_blocks(*shaper, (std::size_t(1) << 17) / std::size_t(d), rng);
      FrameConfig fc;
      const auto f = assemble_frame(*shaper, blocks, fc);
      const auto p = psd_estimate(energy_sequence(f, 'x').e);
      for (std::size_t i = 0; i < p.freq.size(); i += 32)
        r.points.push_back({src.label(), cfg.seed, p.freq[i], p.s[i], 0, 0});
    }
  }
  return r;
}

inline RunResult psd_mapping(const ExperimentConfig& cfg) {
  RunResult r;
  r.preset = "psd-mapping";
  for (auto mapping : {MappingKind::Dim1, MappingKind::Dim2, MappingKind::Dim4}) {
    SourceSpec src;
    src.kind = SourceSpec::Kind::Ccdm;
    src.block_length = 180;
    src.mapping = mapping;
    const auto shaper = make_shaper(shaper_for_source(src));
    Rng rng(cfg.seed);
    std::size_t n_blocks = (std::size_t(1) << 18) * 4 / 180;
    n_blocks = n_blocks / 4 * 4;
    const auto blocks = uniform_blocks(*shaper, n_blocks, rng);
    FrameConfig fc;
    fc.mapping = mapping;
    fc.dual_pol = true;
    const auto f = assemble_frame(*shaper, blocks, fc);
    const auto p = psd_estimate(aggregated_energy(f, 'x').e);
    for (std::size_t i = 0; i < p.freq.size(); i += 32)
      r.points.push_back({std::string("eagg-") + to_string(mapping), cfg.seed, p.freq[i], p.s[i], 0, 0});
  }
  return r;
}

inline RunResult psd_selection(const ExperimentConfig& cfg) {
  RunResult r;
  r.preset = "psd-selection";
  SourceSpec src;
  src.kind = SourceSpec::Kind::Ccdm;
  src.block_length = 180;
  const auto spec = shaper_for_source(src);
  CcdmMatcher shaper(spec);
  const auto kernel = compute_coefficients(single_channel_link(), {});
  FrameConfig fc;
  fc.dual_pol = true;
  const int nu = 2;
  for (const std::string metric : {"none", "edi", "lsas"}) {
    std::vector<double> ensemble;
    Rng rng(cfg.seed);
    for (int rep = 0; rep < 64; ++rep) {
      std::vector<BitVec> payloads(4);
      for (auto& b : payloads) {
        b.resize(shaper.input_bits() - nu);
        for (auto& v : b) v = rng.bit() ? 1 : 0;
      }
      SelectionConfig sc;
      sc.nu = nu;
      sc.n_candidates = metric == "none" ? 1 : 16;
      sc.seed = cfg.seed + std::uint64_t(rep);
      const auto cands = generate_candidates(shaper, payloads, fc, sc);
      std::vector<double> vals;
      for (const auto& f : cands.frames) {
        const int w_edi = std::min(111, int(f.size()) / 2 - 2);
        vals.push_back(metric == "lsas" ? metric_lsas(f, kernel)
                                        : metric == "edi" ? metric_edi(f, w_edi) : 0.0);
      }
      const auto sel = select_candidate(vals);
      const auto e = energy_sequence(cands.frames[sel.index], 'x').e;
      ensemble.insert(ensemble.end(), e.begin(), e.end());
    }
    const auto p = psd_estimate(ensemble, 2048);
    for (std::size_t i = 0; i < p.freq.size(); i += 16)
      r.points.push_back({"sel-" + metric, cfg.seed, p.freq[i], p.s[i], 0, 0});
  }
  return r;
}

inline RunResult edi_law(const ExperimentConfig& cfg) {
  RunResult r;
  r.preset = "edi-law";
  const int w = 111;
  for (int d : {8, 16, 32, 64}) {
    ShaperSpec s;
    s.kind = ShaperKind::Ccdm;
    s.levels = {1, 3, 5, 7};
    s.block_length = d;
    const int base = d / 8;
    s.composition = {4 * base, 2 * base, base, base};
    CcdmMatcher m(s);
    Rng rng(cfg.seed + std::uint64_t(d));
    const auto blocks = uniform_blocks(m, (std::size_t(1) << 21) / std::size_t(d), rng);
    FrameConfig fc;
    const auto f = assemble_frame(m, blocks, fc);
    const double psi = edi(energy_sequence(f, 'x').e, w);
    Rng r0(0);
    const double mu4 = induced_moments(m, 1, 0, r0).report.mu4;
    r.points.push_back({"edi-empirical", cfg.seed, std::log(double(d + 1)), -std::log(psi), 0, 0});
    r.points.push_back({"edi-closed-form", cfg.seed, std::log(double(d + 1)),
                        -std::log(ccdm_edi_closed_form(d, w, mu4)), 0, 0});
  }
  return r;
}

inline std::vector<double> default_power_grid() {
  return {-4.0, -2.5, -1.0, 0.5, 2.0, 3.5};
}

inline RunResult snr_vs_blocklength(const ExperimentConfig& cfg) {
  RunResult r;
  r.preset = "snr-vs-blocklength";
  const LinkConfig link = cfg.full_scale ? cfg.link : scaled_link();
  const auto grid = default_power_grid();
  CprConfig cpr;  // mean phase rotation
  std::vector<SourceSpec> sources;
  {
    SourceSpec u;
    u.kind = SourceSpec::Kind::IidUniform;
    sources.push_back(u);
    SourceSpec mb;
    mb.kind = SourceSpec::Kind::IidMb;
    sources.push_back(mb);
    for (int d : {32, 512}) {
      SourceSpec c;
      c.kind = SourceSpec::Kind::Ccdm;
      c.block_length = d;
      sources.push_back(c);
    }
    for (int d : {8, 32}) {
      SourceSpec e;
      e.kind = SourceSpec::Kind::Ess;
      e.block_length = d;
      sources.push_back(e);
    }
  }
  for (const auto& src : sources) {
    const auto sweep = power_sweep(link, src, cpr, grid, cfg.n_seeds, cfg.n_symbols, cfg.seed);
    Rng boot(cfg.seed ^ 0xb00ULL);
    const auto ci = bootstrap_mean_ci(sweep.snr_opt_per_seed_db, boot);
    const double x = src.kind == SourceSpec::Kind::Ccdm || src.kind == SourceSpec::Kind::Ess
                         ? double(src.block_length)
                         : 1e6;  // "infinite block length" reference
    r.points.push_back({src.label(), cfg.seed, x, mean(sweep.snr_opt_per_seed_db), ci.lo, ci.hi});
    for (std::size_t i = 0; i < sweep.powers_dbm.size(); ++i)
      r.points.push_back({src.label() + "-sweep", cfg.seed, sweep.powers_dbm[i],
                          sweep.snr_db_mean[i], 0, 0});
  }
  return r;
}

// measured and predicted selection gains on the single-channel scaled link
inline RunResult selection_gain(const ExperimentConfig& cfg) {
  RunResult r;
  r.preset = "selection-gain";
  LinkConfig link = single_channel_link();
  // weak-nonlinearity operating point: the metric is first order, and the
  // measured dB-gain is power independent under the P^3 law
  link.launch_power_dbm = -3.0;
  link.noise_figure_db = -300.0;
  const auto kernel = compute_coefficients(link, {});
  const auto am_set = build_am_set(kernel, AmBudget::Full);

  SourceSpec src;
  src.kind = SourceSpec::Kind::IidMb;
  const auto c = iid_constellation(src);
  const std::size_t seg = 256;                        // selection block length
  const std::size_t segs = cfg.n_symbols / seg;       // segments per frame
  // pilot-aided CPR, which tracks the segment-scale phase wander the metric's
  // per-candidate mean-phase removal assumes away
  CprConfig cpr;
  cpr.variant = CprVariant::Lpa;
  cpr.pilot_rate = 0.025;

  auto build_frame = [&](std::uint64_t seed, int n_cand, const std::string& metric,
                         double* mean_metric_am) {
    SymbolFrame full;
    full.baud_rate = link.symbol_rate();
    Rng rng(seed);
    double am_acc = 0.0;
    for (std::size_t sg = 0; sg < segs; ++sg) {
      // candidate segments are interleaved variants of one i.i.d. draw
      FrameConfig fc;
      fc.sign_seed = rng.next_u64();
      fc.pilot_seed = rng.next_u64();
      fc.pilot_rate = cpr.pilot_rate;
      fc.baud_rate = link.symbol_rate();
      auto base = iid_frame(c, seg - seg / std::size_t(std::llround(1.0 / cpr.pilot_rate)) - 1, fc);
      base.x.resize(seg);
      base.pilot_mask.resize(seg);
      std::vector<double> vals;
      std::vector<SymbolFrame> cands;
      for (int i = 0; i < n_cand; ++i) {
        const auto perm = interleave_permutation(base.data_count(), seed ^ (sg * 977ULL), i);
        cands.push_back(permute_data_symbols(base, perm));
        vals.push_back(metric == "am" ? metric_am(cands.back(), am_set)
                                      : metric_lsas(cands.back(), kernel));
      }
      const auto sel = select_candidate(vals);
      am_acc += metric_am(cands[sel.index], am_set) / double(seg);  // per symbol
      const auto& chosen = cands[sel.index];
      full.x.insert(full.x.end(), chosen.x.begin(), chosen.x.end());
      full.pilot_mask.insert(full.pilot_mask.end(), chosen.pilot_mask.begin(),
                             chosen.pilot_mask.end());
    }
    if (mean_metric_am) *mean_metric_am = am_acc / double(segs);
    return full;
  };

  auto measure = [&](int n_cand, const std::string& metric, double* am_metric) {
    double p_acc = 0.0, am_acc = 0.0;
    for (int s = 0; s < cfg.n_seeds; ++s) {
      double am = 0.0;
      const auto tx = build_frame(cfg.seed + 31ULL * std::uint64_t(s), n_cand, metric, &am);
      auto w = modulate_wdm({&tx}, link);
      SsfmOptions opt;
      opt.noise_on = false;
      ssfm_propagate(w, link, cfg.seed + 7ULL * std::uint64_t(s), opt);
      const auto res = receiver_dsp(w, link, cpr, tx);
      double p = 0.0;
      for (const auto& v : res.residual_data) p += std::norm(v);
      p_acc += p / double(res.residual_data.size());
      am_acc += am;
    }
    if (am_metric) *am_metric = am_acc / cfg.n_seeds;
    return p_acc / cfg.n_seeds;
  };

  double am_ref = 0.0;
  const double p_ref = measure(1, "am", &am_ref);
  // the metric models the pulse-matched NLIN share; the complement barely
  // responds to selection and is calibrated once from the reference system
  const double am_scale = am_ref > 0.0 ? p_ref / am_ref : 1.0;
  const double floor = std::max(0.0, p_ref - am_ref * std::min(1.0, am_scale));
  const double matched_scale = std::min(1.0, am_scale);
  for (const std::string metric : {"lsas", "am"}) {
    for (int nt : {4, 16}) {
      double am_sel = 0.0;
      const double p_sel = measure(nt, metric, &am_sel);
      const double measured = predict_selection_gain_db(p_ref, p_sel);
      const double predicted =
          predict_selection_gain_db(p_ref, am_sel * matched_scale + floor);
      r.points.push_back({metric + "-measured", cfg.seed, double(nt), measured, 0, 0});
      if (metric == "am")
        r.points.push_back({metric + "-predicted", cfg.seed, double(nt), predicted, 0, 0});
    }
  }
  return r;
}

inline RunResult air_vs_blocklength(const ExperimentConfig& cfg) {
  RunResult r;
  r.preset = "air-vs-blocklength";
  const LinkConfig base = cfg.full_scale ? cfg.link : scaled_link();
  CprConfig cpr;
  for (int d : {16, 64, 256}) {
    for (const auto kind : {SourceSpec::Kind::Ccdm, SourceSpec::Kind::Ess}) {
      SourceSpec src;
      src.kind = kind;
      src.block_length = d;
      LinkConfig l = base;
      l.launch_power_dbm = 0.5;  // near the optimum of the scaled link
      FrameConfig fc;
      fc.baud_rate = l.symbol_rate();
      std::vector<SymbolFrame> frames;
      for (int ch = 0; ch < l.n_channels; ++ch)
        frames.push_back(source_frame(src, cfg.n_symbols, fc, cfg.seed * 91ULL + std::uint64_t(ch)));
      std::vector<const SymbolFrame*> ptrs;
      for (const auto& f : frames) ptrs.push_back(&f);
      auto w = modulate_wdm(ptrs, l);
      ssfm_propagate(w, l, cfg.seed, {});
      const auto coi = std::size_t(l.n_channels / 2);
      const auto res = receiver_dsp(w, l, cpr, frames[coi]);
      const auto shaper = make_shaper(shaper_for_source(src));
      // shaped constellation for the metric: induced marginal probabilities
      const auto marg = shaper->average_marginal();
      const int m = 4 * int(src.levels.size()) * int(src.levels.size());
      const auto cst = build_qam(m, qam_probs_from_amplitudes(m, marg));
      // rescale rx/tx to the constellation's unit-energy grid
      const double nv = estimate_noise_var(frames[coi], res.equalized);
      const auto est = air_bmd(frames[coi], res.equalized, cst, nv);
      const double loss = rate_loss(*shaper);
      // net rate: AIR minus the shaping rate loss on two amplitudes per symbol
      r.points.push_back({src.label() + "-air", cfg.seed, double(d), est.air_per_2d, est.ci.lo,
                          est.ci.hi});
      r.points.push_back({src.label() + "-net", cfg.seed, double(d), est.air_per_2d - 2.0 * loss,
                          0, 0});
    }
  }
  return r;
}

inline RunResult complexity_preset(const ExperimentConfig& cfg) {
  RunResult r;
  r.preset = "complexity";
  for (int spans : {2, 4, 8, 12, 20, 28, 40}) {
    LinkConfig l = cfg.link;
    l.n_spans = spans;
    const int w = window_sizes(l).w_mem;
    const auto rep = complexity_report(w, 16);
    const double x = double(spans) * l.span_length_km;
    r.points.push_back({"n-full", cfg.seed, x, double(rep.n_full), 0, 0});
    r.points.push_back({"n-selected", cfg.seed, x, double(rep.n_selected), 0, 0});
    r.points.push_back({"n-quantized", cfg.seed, x, double(rep.n_quantized), 0, 0});
    r.points.push_back({"c-am-quantized", cfg.seed, x, double(rep.c_am_quantized), 0, 0});
  }
  return r;
}

inline RunResult cpr_filter_learning(const ExperimentConfig& cfg) {
  RunResult r;
  r.preset = "cpr-filter";
  LinkConfig link = single_channel_link();
  link.launch_power_dbm = 1.0;
  link.noise_figure_db = -300.0;
  const auto kernel = compute_coefficients(link, {});
  SourceSpec src;
  src.kind = SourceSpec::Kind::IidMb;

  struct Setup {
    std::string name;
    CprConfig cpr;
    double pilot_rate;
  };
  std::vector<Setup> setups;
  setups.push_back({"mpr", {}, 0.0});
  {
    CprConfig lpa;
    lpa.variant = CprVariant::Lpa;
    lpa.pilot_rate = 0.01;
    setups.push_back({"lpa-1pct", lpa, 0.01});
    lpa.pilot_rate = 0.025;
    setups.push_back({"lpa-2.5pct", lpa, 0.025});
  }
  for (const auto& setup : setups) {
    FrameConfig fc;
    fc.pilot_rate = setup.pilot_rate;
    fc.baud_rate = link.symbol_rate();
    const auto tx = source_frame(src, cfg.n_symbols, fc, cfg.seed);
    auto w = modulate_wdm({&tx}, link);
    SsfmOptions opt;
    opt.noise_on = false;
    ssfm_propagate(w, link, cfg.seed ^ 0xfeedULL, opt);
    const auto res = receiver_dsp(w, link, setup.cpr, tx);
    // split the prediction into the multiplicative phase term and the rest,
    // subtract the additive rest, then read the residual phase
    const auto dx = predict_nlin(kernel, {std::span<const cplx>(tx.x)});
    const auto taps0 = kernel.taps(0);
    const std::size_t n = tx.size();
    std::vector<double> energy(n);
    double ebar = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      energy[k] = std::norm(tx.x[k]);
      ebar += energy[k];
    }
    ebar /= double(n);
    std::vector<double> phi(n);
    const int half = kernel.w_mem;
    for (std::size_t k = 0; k < n; ++k) {
      double conv = 0.0;
      for (int nn = -half; nn <= half; ++nn)
        conv += energy[std::size_t((long(k) - nn + long(n)) % long(n))] / ebar *
                taps0[std::size_t(nn + half)];
      const cplx dprime = dx[k] - cplx(0, 1) * tx.x[k] * conv;
      const cplx mult = res.equalized.x[k] - dprime;
      phi[k] = std::arg(mult / tx.x[k]);
    }
    const auto learned = fit_overall_filter(phi, energy, kernel.w_mem);
    const auto resp = frequency_response(learned);
    const double peak = *std::max_element(resp.mag.begin(), resp.mag.end());
    for (std::size_t i = 0; i < resp.freq.size(); i += 32)
      r.points.push_back({"learned-" + setup.name, cfg.seed, resp.freq[i], resp.mag[i] / peak, 0, 0});
    // learned DC relative to peak highlights the pilot-rate notch
    r.points.push_back({"dc-" + setup.name, cfg.seed, 0.0, resp.mag[0] / peak, 0, 0});
  }
  return r;
}

}  // namespace presets

inline RunResult run_preset(const ExperimentConfig& cfg) {
  cfg.validate();
  using Fn = std::function<RunResult(const ExperimentConfig&)>;
  static const std::map<std::string, Fn> registry{
      {"rate-loss-moments", presets::rate_loss_moments},
      {"filter-response", presets::filter_response_preset},
      {"psd-ccdm", presets::psd_ccdm},
      {"psd-ess-ccdm", presets::psd_shapers},
      {"psd-mapping", presets::psd_mapping},
      {"psd-selection", presets::psd_selection},
      {"edi-law", presets::edi_law},
      {"snr-vs-blocklength", presets::snr_vs_blocklength},
      {"selection-gain", presets::selection_gain},
      {"air-vs-blocklength", presets::air_vs_blocklength},
      {"complexity", presets::complexity_preset},
      {"cpr-filter", presets::cpr_filter_learning},
  };
  const auto it = registry.find(cfg.preset);
  if (it == registry.end()) {
    std::string names;
    for (const auto& [k, v] : registry) names += k + " ";
    throw std::invalid_argument("unknown preset '" + cfg.preset + "'; available: " + names);
  }
  auto result = it->second(cfg);
  result.meta["preset"] = cfg.preset;
  result.meta["seed"] = cfg.seed;
  result.meta["n_seeds"] = cfg.n_seeds;
  result.meta["n_symbols"] = cfg.n_symbols;
  result.meta["full_scale"] = cfg.full_scale;
  result.meta["link"] = cfg.link.to_json();
  result.meta["schema_version"] = 1;
  return result;
}

inline std::vector<std::string> preset_names() {
  return {"rate-loss-moments", "filter-response", "psd-ccdm", "psd-ess-ccdm",
          "psd-mapping",       "psd-selection",   "edi-law",  "snr-vs-blocklength",
          "selection-gain",    "air-vs-blocklength", "complexity", "cpr-filter"};
}

}  // namespace shapinglab
