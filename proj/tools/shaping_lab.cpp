// shaping-lab: probabilistic amplitude shaping workbench for nonlinear fiber
// links. Subcommands cover matcher inspection, link simulation, analytic
// models, sequence selection and the preset experiment runner.
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shapinglab/experiments.hpp"

using namespace shapinglab;

namespace {

std::vector<int> parse_levels(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

// amplitude-only shaping rate; values above the alphabet limit are read as
// bits per 1-D symbol (sign bit included) for convenience
double amplitude_rate(double rate, std::size_t n_levels) {
  const double cap = std::log2(double(n_levels));
  if (rate > cap) {
    std::fprintf(stderr,
                 "[note] rate %.3f exceeds the %.0f-bit amplitude alphabet; "
                 "interpreting as bits per 1-D symbol (amplitude rate %.3f)\n",
                 rate, cap, rate - 1.0);
    return rate - 1.0;
  }
  return rate;
}

int cmd_matcher(const std::string& kind, int d, double rate, const std::string& levels_csv,
                int pairing) {
  SourceSpec src;
  src.kind = kind == "ccdm"  ? SourceSpec::Kind::Ccdm
             : kind == "ess" ? SourceSpec::Kind::Ess
                             : SourceSpec::Kind::Kess;
  src.block_length = d;
  src.levels = parse_levels(levels_csv);
  src.rate = amplitude_rate(rate, src.levels.size());
  const auto spec = shaper_for_source(src);
  const auto shaper = make_shaper(spec);
  Rng rng(1);
  const auto im = induced_moments(*shaper, pairing, 20000, rng);
  std::printf("kind            : %s\n", kind.c_str());
  std::printf("block length D  : %d\n", d);
  std::printf("N_seq           : %s\n", shaper->sequence_count().to_string().c_str());
  std::printf("log2(N_seq)     : %.6f\n", shaper->sequence_count().log2());
  std::printf("input bits k    : %zu\n", shaper->input_bits());
  std::printf("shaping rate    : %.6f bits/amplitude\n", shaper_rate(*shaper));
  std::printf("rate loss       : %.6f bits/amplitude\n", rate_loss(*shaper));
  if (spec.kind == ShaperKind::Ess || spec.kind == ShaperKind::Kess)
    std::printf("energy bound    : %lld\n", spec.energy_bound);
  std::printf("induced mu4     : %.6f\n", im.report.mu4);
  std::printf("induced mu6     : %.6f\n", im.report.mu6);
  return 0;
}

std::vector<double> parse_sweep(const std::string& s) {
  // "lo:step:hi" inclusive
  std::vector<double> out;
  double lo = 0, step = 0, hi = 0;
  if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &lo, &step, &hi) != 3 || step <= 0)
    throw CLI::ValidationError("--power-sweep expects lo:step:hi with step > 0");
  for (double p = lo; p <= hi + 1e-9; p += step) out.push_back(p);
  return out;
}

SourceSpec make_source(const std::string& source, int d, double rate, const std::string& levels,
                       const std::string& mapping) {
  SourceSpec src;
  src.kind = source == "iid-mb"        ? SourceSpec::Kind::IidMb
             : source == "iid-uniform" ? SourceSpec::Kind::IidUniform
             : source == "ccdm"        ? SourceSpec::Kind::Ccdm
             : source == "ess"         ? SourceSpec::Kind::Ess
                                       : SourceSpec::Kind::Kess;
  src.block_length = d;
  src.levels = parse_levels(levels);
  src.rate = amplitude_rate(rate, src.levels.size());
  src.mapping = mapping_from_string(mapping);
  return src;
}

int cmd_simulate(const LinkConfig& link, const SourceSpec& src, const std::string& sweep,
                 const CprConfig& cpr, int seeds, std::size_t symbols, std::uint64_t seed) {
  const auto powers = parse_sweep(sweep);
  const auto res = power_sweep(link, src, cpr, powers, seeds, symbols, seed);
  std::printf("# source %s on %d spans x %.0f km, %d channels\n", src.label().c_str(),
              link.n_spans, link.span_length_km, link.n_channels);
  std::printf("%10s %12s\n", "P[dBm]", "SNR_eff[dB]");
  for (std::size_t i = 0; i < res.powers_dbm.size(); ++i)
    std::printf("%10.2f %12.3f\n", res.powers_dbm[i], res.snr_db_mean[i]);
  std::printf("fit: P_ase = %.4g W, eta = %.4g 1/W^2\n", res.fit.p_ase, res.fit.eta);
  std::printf("optimum: P = %.3f dBm, SNR_eff = %.3f dB\n", res.fit.optimum_power_dbm(),
              res.fit.optimum_snr_db());
  return 0;
}

int cmd_analyze(const std::string& what, const SourceSpec& src, const LinkConfig& link, int window,
                const std::string& out) {
  std::ostringstream csv;
  if (what == "moments") {
    const auto shaper = make_shaper(shaper_for_source(src));
    Rng rng(1);
    const auto im = induced_moments(*shaper, mapping_dims(src.mapping), 20000, rng);
    csv << "metric,value\nmu4," << im.report.mu4 << "\nmu6," << im.report.mu6 << "\nrate_loss,"
        << rate_loss(*shaper) << "\n";
  } else if (what == "edi") {
    const auto shaper = make_shaper(shaper_for_source(src));
    Rng rng(1);
    const auto blocks =
        uniform_blocks(*shaper, (std::size_t(1) << 19) / std::size_t(src.block_length), rng);
    FrameConfig fc;
    const auto f = assemble_frame(*shaper, blocks, fc);
    const auto rep = windowed_moments(energy_sequence(f, 'x').e, window);
    csv << "metric,value\nw," << rep.w << "\nm2w," << rep.m2w << "\nm3w," << rep.m3w << "\nmu4w,"
        << rep.mu4w << "\nmu6w," << rep.mu6w << "\nedi," << rep.edi << "\n";
  } else if (what == "psd") {
    const auto shaper = make_shaper(shaper_for_source(src));
    Rng rng(1);
    const auto blocks =
        uniform_blocks(*shaper, (std::size_t(1) << 18) / std::size_t(src.block_length), rng);
    FrameConfig fc;
    const auto f = assemble_frame(*shaper, blocks, fc);
    const auto p = psd_estimate(energy_sequence(f, 'x').e);
    csv << "freq,psd\n";
    for (std::size_t i = 0; i < p.freq.size(); ++i) csv << p.freq[i] << "," << p.s[i] << "\n";
  } else if (what == "filter") {
    KernelConfig kc;
    kc.taps_only = true;
    LinkConfig l = link;
    l.n_channels = 1;
    l.samples_per_symbol = std::min(l.samples_per_symbol, 4);
    kc.w_mem = std::max(24, 2 * window_sizes(l).w_spm);
    const auto resp = filter_response(compute_coefficients(l, kc));
    csv << "freq,mag\n";
    for (std::size_t i = 0; i < resp.freq.size(); ++i)
      csv << resp.freq[i] << "," << resp.mag[i] << "\n";
    csv << "# 3dB bandwidth: " << resp.bandwidth_3db << " cycles/symbol\n";
  } else {
    throw CLI::ValidationError("analyze: pick one of --moments --edi --psd --filter");
  }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream os(out);
    os << csv.str();
    std::printf("wrote %s\n", out.c_str());
  }
  return 0;
}

int cmd_select(const SourceSpec& src, const LinkConfig& link, const std::string& metric, int nu,
               int candidates, std::uint64_t seed, const std::string& csv_path) {
  const auto spec = shaper_for_source(src);
  const auto shaper = make_shaper(spec);
  LinkConfig l = link;
  l.n_channels = 1;
  l.samples_per_symbol = 4;
  const auto kernel = compute_coefficients(l, {});
  const auto am_full = build_am_set(kernel, AmBudget::Full);
  const auto am_q = build_am_set(kernel, AmBudget::Quantized);

  Rng rng(seed);
  std::vector<BitVec> payloads(4);
  for (auto& b : payloads) {
    b.resize(shaper->input_bits() - std::size_t(nu));
    for (auto& v : b) v = rng.bit() ? 1 : 0;
  }
  SelectionConfig sc;
  sc.nu = nu;
  sc.n_candidates = candidates;
  sc.metric = selection_metric_from_string(metric);
  sc.seed = seed;
  FrameConfig fc;
  const auto cands = generate_candidates(*shaper, payloads, fc, sc);
  std::vector<double> vals;
  for (const auto& f : cands.frames) {
    switch (sc.metric) {
      case SelectionMetric::Edi: vals.push_back(metric_edi(f, sc.edi_window)); break;
      case SelectionMetric::Lsas: vals.push_back(metric_lsas(f, kernel)); break;
      case SelectionMetric::Am: vals.push_back(metric_am(f, am_full)); break;
      case SelectionMetric::AmQuantized: vals.push_back(metric_am(f, am_q)); break;
    }
  }
  const auto sel = select_candidate(vals);
  std::ostringstream csv;
  csv << "candidate,metric\n";
  for (std::size_t i = 0; i < vals.size(); ++i) csv << i << "," << vals[i] << "\n";
  if (!csv_path.empty()) {
    std::ofstream os(csv_path);
    os << csv.str();
  } else {
    std::cout << csv.str();
  }
  std::printf("chosen candidate: %zu (metric %.6g)\n", sel.index, vals[sel.index]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probabilistic shaping workbench for nonlinear fiber links"};
  app.require_subcommand(1);

  std::string config_path, levels = "1,3,5,7", mapping = "1d";
  std::string source = "ccdm", kind = "ccdm", metric = "lsas", sweep = "-4:1:4";
  std::string out_dir = "results", out_file, preset, baseline_csv, run_csv, cpr_name = "mpr";
  int d = 64, nu = 2, candidates = 16, seeds = 5, window = 111, pairing = 1, n_cpr = 50;
  double rate = 1.5, tol = 1e-9, pilot_rate = 0.0;
  std::size_t symbols = std::size_t(1) << 13;
  std::uint64_t seed = 7;
  bool full = false, ci_overlap = false, scaled = false;

  auto add_source_opts = [&](CLI::App* c) {
    c->add_option("--source", source, "iid-mb | iid-uniform | ccdm | ess | kess");
    c->add_option("--D", d, "shaping block length");
    c->add_option("--rate", rate, "shaping rate, bits/amplitude");
    c->add_option("--levels", levels, "amplitude levels, comma separated");
    c->add_option("--mapping", mapping, "1d | 2d | 4d");
  };
  auto add_link_opts = [&](CLI::App* c) {
    c->add_option("--config", config_path, "link config json");
    c->add_flag("--scaled", scaled, "use the desk-scale link (4 spans, 3 channels)");
  };
  auto load_link = [&]() {
    LinkConfig l = scaled ? scaled_link() : LinkConfig{};
    if (!config_path.empty()) l = LinkConfig::load(config_path);
    return l;
  };

  auto* m = app.add_subcommand("matcher", "inspect a fixed-to-fixed shaper");
  m->add_option("--kind", kind, "ccdm | ess | kess")->required();
  m->add_option("--D", d)->required();
  m->add_option("--rate", rate)->required();
  m->add_option("--levels", levels);
  m->add_option("--pairing", pairing, "QAM pairing: 1, 2 or 4 dimensional");

  auto* sim = app.add_subcommand("simulate", "power sweep over the split-step simulator");
  add_link_opts(sim);
  add_source_opts(sim);
  sim->add_option("--power-sweep", sweep, "lo:step:hi in dBm");
  sim->add_option("--seed", seed);
  sim->add_option("--seeds", seeds, "independent noise seeds per power");
  sim->add_option("--symbols", symbols);
  sim->add_option("--cpr", cpr_name, "mpr | ma | lpa");
  sim->add_option("--n-cpr", n_cpr, "moving-average half window");
  sim->add_option("--pilot-rate", pilot_rate);

  auto* an = app.add_subcommand("analyze", "analytic models without propagation");
  add_link_opts(an);
  add_source_opts(an);
  bool w_psd = false, w_filter = false, w_edi = false, w_moments = false;
  an->add_flag("--psd", w_psd);
  an->add_flag("--filter", w_filter);
  an->add_flag("--edi", w_edi);
  an->add_flag("--moments", w_moments);
  an->add_option("--window", window, "EDI window in symbols");
  an->add_option("--out", out_file, "write csv here instead of stdout");

  auto* sel = app.add_subcommand("select", "sequence selection over candidates");
  add_link_opts(sel);
  add_source_opts(sel);
  sel->add_option("--metric", metric, "edi | lsas | am | am-q");
  sel->add_option("--nu", nu);
  sel->add_option("--candidates", candidates);
  sel->add_option("--seed", seed);
  sel->add_option("--csv", out_file, "per-candidate metric log");

  auto* rn = app.add_subcommand("run", "preset experiment runner");
  rn->add_option("--preset", preset, "preset name; see the presets subcommand")->required();
  add_link_opts(rn);
  rn->add_option("--seed", seed);
  rn->add_option("--seeds", seeds);
  rn->add_option("--symbols", symbols);
  rn->add_option("--out", out_dir);
  rn->add_flag("--full", full, "run the configured link at full scale");

  auto* ls = app.add_subcommand("presets", "list preset names");

  auto* cp = app.add_subcommand("compare", "regression-compare two results.csv files");
  cp->add_option("baseline", baseline_csv)->required();
  cp->add_option("run", run_csv)->required();
  cp->add_option("--tol", tol);
  cp->add_flag("--ci-overlap", ci_overlap, "pass when confidence intervals intersect");

  CLI11_PARSE(app, argc, argv);

  try {
    if (m->parsed()) return cmd_matcher(kind, d, rate, levels, pairing);
    if (sim->parsed()) {
      CprConfig cpr;
      if (cpr_name == "ma") {
        cpr.variant = CprVariant::MovingAverage;
        cpr.n_cpr = n_cpr;
      } else if (cpr_name == "lpa") {
        cpr.variant = CprVariant::Lpa;
        cpr.pilot_rate = pilot_rate > 0 ? pilot_rate : 0.01;
      }
      return cmd_simulate(load_link(), make_source(source, d, rate, levels, mapping), sweep, cpr,
                          seeds, symbols, seed);
    }
    if (an->parsed()) {
      const std::string what = w_psd ? "psd" : w_filter ? "filter" : w_edi ? "edi" : "moments";
      return cmd_analyze(what, make_source(source, d, rate, levels, mapping), load_link(), window,
                         out_file);
    }
    if (sel->parsed())
      return cmd_select(make_source(source, d, rate, levels, mapping), load_link(), metric, nu,
                        candidates, seed, out_file);
    if (rn->parsed()) {
      ExperimentConfig cfg;
      cfg.preset = preset;
      if (!config_path.empty() || scaled) cfg.link = load_link();
      cfg.seed = seed;
      cfg.n_seeds = seeds;
      cfg.n_symbols = symbols;
      cfg.out_dir = out_dir;
      cfg.full_scale = full;
      const auto result = run_preset(cfg);
      write_results(result, cfg.out_dir);
      std::printf("wrote %s/results.csv (%zu points) and meta.json\n", cfg.out_dir.c_str(),
                  result.points.size());
      return 0;
    }
    if (ls->parsed()) {
      for (const auto& n : preset_names()) std::printf("%s\n", n.c_str());
      return 0;
    }
    if (cp->parsed()) {
      const auto rep = compare_results(baseline_csv, run_csv, tol, ci_overlap);
      for (const auto& [series_name, dev] : rep.max_deviation)
        std::printf("series %-24s max |dy| = %.6g\n", series_name.c_str(), dev);
      for (const auto& f : rep.failures) std::printf("FAIL %s\n", f.c_str());
      std::printf("%s\n", rep.pass ? "PASS" : "FAIL");
      return rep.pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
