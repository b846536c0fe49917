#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "shapinglab/gnfit.hpp"
#include "shapinglab/matcher.hpp"
#include "shapinglab/pas.hpp"
#include "shapinglab/rxdsp.hpp"
#include "shapinglab/ssfm.hpp"

using namespace shapinglab;

namespace {

LinkConfig small_link() {
  LinkConfig l;
  l.n_spans = 2;
  l.n_channels = 1;
  l.samples_per_symbol = 4;
  l.launch_power_dbm = -2.0;
  return l;
}

SymbolFrame test_frame(std::size_t n_sym, std::uint64_t seed, double pilot_rate = 0.0) {
  ShaperSpec s;
  s.kind = ShaperKind::Ccdm;
  s.levels = {1, 3, 5, 7};
  s.block_length = 32;
  s.composition = ccdm_composition_for_rate(32, s.levels, 1.5);
  CcdmMatcher m(s);
  Rng rng(seed);
  FrameConfig cfg;
  cfg.pilot_rate = pilot_rate;
  // oversize the block count, then trim the frame to n_sym
  auto blocks = random_blocks(m, 2 * (n_sym / 32 + 2), rng);
  auto f = assemble_frame(m, blocks, cfg);
  f.x.resize(n_sym);
  f.pilot_mask.resize(n_sym);
  return f;
}

}  // namespace

TEST_CASE("linear channel roundtrip is transparent") {
  LinkConfig l = small_link();
  l.gamma_per_w_km = 0.0;
  const auto tx = test_frame(2048, 1);
  auto w = modulate_wdm({&tx}, l);
  SsfmOptions opt;
  opt.noise_on = false;
  ssfm_propagate(w, l, 7, opt);
  CprConfig cpr;  // MPR
  const auto res = receiver_dsp(w, l, cpr, tx);
  // EVM below -40 dB means SNR above 40 dB
  CHECK(res.snr.snr_db > 40.0);
}

TEST_CASE("zero-dispersion zero-loss propagation preserves sample magnitudes") {
  LinkConfig l = small_link();
  l.dispersion_ps_nm_km = 0.0;
  l.alpha_db_per_km = 0.0;
  l.n_spans = 1;
  const auto tx = test_frame(1024, 2);
  auto w = modulate_wdm({&tx}, l);
  const auto before = w.x;
  SsfmOptions opt;
  opt.noise_on = false;
  ssfm_propagate(w, l, 1, opt);
  for (std::size_t i = 0; i < w.size(); ++i)
    CHECK(std::abs(w.x[i]) == doctest::Approx(std::abs(before[i])).epsilon(1e-12));
}

TEST_CASE("lossless nonlinear propagation conserves energy per span") {
  LinkConfig l = small_link();
  l.alpha_db_per_km = 0.0;
  l.noise_figure_db = -300.0;
  l.launch_power_dbm = 3.0;
  l.n_spans = 1;
  const auto tx = test_frame(1024, 3);
  auto w = modulate_wdm({&tx}, l);
  double e0 = 0.0;
  for (const auto& v : w.x) e0 += std::norm(v);
  SsfmOptions opt;
  opt.noise_on = false;
  ssfm_propagate(w, l, 1, opt);
  double e1 = 0.0;
  for (const auto& v : w.x) e1 += std::norm(v);
  CHECK(e1 == doctest::Approx(e0).epsilon(1e-9));
}

TEST_CASE("injected awgn snr is recovered") {
  const auto tx = test_frame(1 << 15, 4);
  SymbolFrame rx = tx;
  const double snr_db = 13.0;
  const double sigma2 = std::pow(10.0, -snr_db / 10.0);  // E = 1
  Rng rng(5);
  const double s1 = std::sqrt(sigma2 / 2.0);
  for (auto& v : rx.x) v += cplx(s1 * rng.normal(), s1 * rng.normal());
  const auto est = measure_effective_snr(tx, rx);
  CHECK(est.snr_db == doctest::Approx(snr_db).epsilon(0.004));
  CHECK(est.ci.contains(est.snr_db));
}

TEST_CASE("identical frames cap the snr estimate") {
  const auto tx = test_frame(1024, 6);
  const auto est = measure_effective_snr(tx, tx);
  CHECK(est.capped);
  CHECK(est.snr_db == 300.0);
}

TEST_CASE("mpr removes a constant phase rotation exactly") {
  const auto tx = test_frame(4096, 7);
  SymbolFrame rx = tx;
  for (auto& v : rx.x) v *= std::polar(1.0, 0.3);
  cplx acc = 0.0;
  for (std::size_t k = 0; k < rx.size(); ++k) acc += rx.x[k] * std::conj(tx.x[k]);
  CHECK(std::arg(acc) == doctest::Approx(0.3).epsilon(1e-12));
  for (auto& v : rx.x) v *= std::polar(1.0, -std::arg(acc));
  const auto est = measure_effective_snr(tx, rx);
  CHECK(est.snr_db > 250.0);
}

TEST_CASE("propagation is deterministic per seed") {
  LinkConfig l = small_link();
  const auto tx = test_frame(1024, 8);
  auto w1 = modulate_wdm({&tx}, l);
  auto w2 = modulate_wdm({&tx}, l);
  ssfm_propagate(w1, l, 42);
  ssfm_propagate(w2, l, 42);
  for (std::size_t i = 0; i < w1.size(); ++i) CHECK(w1.x[i] == w2.x[i]);

  auto w3 = modulate_wdm({&tx}, l);
  ssfm_propagate(w3, l, 43);
  bool differs = false;
  for (std::size_t i = 0; i < w3.size(); ++i)
    if (w3.x[i] != w1.x[i]) differs = true;
  CHECK(differs);
}

TEST_CASE("low-power snr approaches the analytic ase limit") {
  LinkConfig l = small_link();
  l.launch_power_dbm = -12.0;
  const auto tx = test_frame(1 << 13, 9);
  auto w = modulate_wdm({&tx}, l);
  ssfm_propagate(w, l, 11);
  CprConfig cpr;
  const auto res = receiver_dsp(w, l, cpr, tx);
  // accumulated ASE energy per symbol = n_spans * S_ase; signal energy = P T
  const double snr_theory =
      db10(l.launch_power_w() * l.symbol_time() / (l.n_spans * l.ase_psd_per_amp()));
  CHECK(res.snr.snr_db == doctest::Approx(snr_theory).epsilon(0.02));
}

TEST_CASE("pilot-aided cpr beats mean phase rotation on a nonlinear link") {
  // i.i.d. input keeps the NLIN phase noise low-frequency, where pilot
  // interpolation can track it (finite-length shaping would notch it out)
  LinkConfig l = small_link();
  l.n_spans = 8;
  l.launch_power_dbm = 3.0;
  l.noise_figure_db = -300.0;  // isolate NLIN
  const auto ap = mb_distribution(std::vector<double>{1, 3, 5, 7}, 0.03);
  const auto c = build_qam(64, qam_probs_from_amplitudes(64, ap));
  FrameConfig fc;
  fc.pilot_rate = 0.025;
  fc.sign_seed = 10;
  auto tx = iid_frame(c, (1 << 13) - (1 << 13) / 40, fc);
  tx.x.resize(1 << 13);
  tx.pilot_mask.resize(1 << 13);
  auto w = modulate_wdm({&tx}, l);
  SsfmOptions opt;
  opt.noise_on = false;
  ssfm_propagate(w, l, 12, opt);
  CprConfig mpr;
  const auto r_mpr = receiver_dsp(w, l, mpr, tx);
  CprConfig lpa;
  lpa.variant = CprVariant::Lpa;
  lpa.pilot_rate = 0.025;
  const auto r_lpa = receiver_dsp(w, l, lpa, tx);
  CHECK(r_lpa.snr.snr_db > r_mpr.snr.snr_db);
  // the genie moving-average tracker does even better
  CprConfig ma;
  ma.variant = CprVariant::MovingAverage;
  ma.n_cpr = 50;
  const auto r_ma = receiver_dsp(w, l, ma, tx);
  CHECK(r_ma.snr.snr_db > r_mpr.snr.snr_db);
}

TEST_CASE("undersampled wdm grid is rejected") {
  LinkConfig l;
  l.n_channels = 3;
  l.samples_per_symbol = 2;
  CHECK_THROWS(l.validate());
}

TEST_CASE("gn model fit and gain algebra") {
  const GnFit truth{2.5e-6, 1.3e3};
  std::vector<double> p, snr;
  for (double dbm = -4.0; dbm <= 4.01; dbm += 0.5) {
    const double pw = 1e-3 * std::pow(10.0, dbm / 10.0);
    p.push_back(pw);
    snr.push_back(truth.snr_at(pw));
  }
  const auto fit = fit_gn_model(p, snr);
  CHECK(fit.p_ase == doctest::Approx(truth.p_ase).epsilon(1e-6));
  CHECK(fit.eta == doctest::Approx(truth.eta).epsilon(1e-6));

  // equal eta means zero nonlinear gain
  CHECK(nonlinear_gain_db_from_eta(fit, fit) == doctest::Approx(0.0));

  // three routes agree to 1e-9 dB on fitted models
  GnFit shaped = fit;
  shaped.eta *= 1.35;
  shaped.p_ase *= 1.02;  // slightly different fitted ASE
  const double g1 = nonlinear_gain_db_from_eta(fit, shaped);
  const double g2 = nonlinear_gain_db_from_popt(fit, shaped);
  const double g3 = nonlinear_gain_db_from_snropt(fit, shaped);
  CHECK(std::abs(g1 - g2) < 1e-9);
  CHECK(std::abs(g1 - g3) < 1e-9);
  CHECK(g1 == doctest::Approx(-10.0 / 3.0 * std::log10(1.35)).epsilon(1e-12));

  // optimum consistency: snr_at(P_opt) equals the closed form
  CHECK(fit.snr_at(fit.optimum_power_w()) ==
        doctest::Approx(fit.optimum_snr_linear()).epsilon(1e-12));

  CHECK_THROWS(fit_gn_model(std::vector<double>{1e-3, 2e-3}, std::vector<double>{10.0, 11.0}));
}

TEST_CASE("snr concave and unimodal over a synthetic sweep") {
  const GnFit truth{1e-6, 8e2};
  double last = 0.0;
  bool rising = true;
  int turns = 0;
  for (double dbm = -6.0; dbm <= 6.01; dbm += 0.5) {
    const double s = truth.snr_at(1e-3 * std::pow(10.0, dbm / 10.0));
    if (dbm > -6.0) {
      if (rising && s < last) {
        rising = false;
        ++turns;
      } else if (!rising) {
        CHECK(s < last);
      }
    }
    last = s;
  }
  CHECK(turns == 1);
}
