#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "shapinglab/air.hpp"
#include "shapinglab/constellation.hpp"
#include "shapinglab/pas.hpp"
#include "shapinglab/rng.hpp"

using namespace shapinglab;

namespace {

// physicists' Gauss-Hermite nodes/weights by Newton iteration
void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(std::size_t(n));
  w.resize(std::size_t(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t;
    if (i == 0)
      t = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    else if (i == 1)
      t = x[0] - 1.14 * std::pow(double(n), 0.426) / x[0];
    else if (i == 2)
      t = 1.86 * x[1] - 0.86 * x[0];
    else if (i == 3)
      t = 1.91 * x[2] - 0.91 * x[1];
    else
      t = 2.0 * x[std::size_t(i - 1)] - x[std::size_t(i - 2)];
    double dp = 0.0;
    for (int it = 0; it < 200; ++it) {
      // Hermite recurrence in the orthonormal scaling
      double p0 = std::pow(M_PI, -0.25), p1 = std::sqrt(2.0) * t * p0;
      for (int j = 2; j <= n; ++j) {
        const double p2 = t * std::sqrt(2.0 / j) * p1 - std::sqrt(double(j - 1) / j) * p0;
        p0 = p1;
        p1 = p2;
      }
      dp = std::sqrt(2.0 * n) * p0;
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-14) break;
    }
    x[std::size_t(i)] = t;
    w[std::size_t(i)] = 2.0 / (dp * dp);
    x[std::size_t(n - 1 - i)] = -t;
    w[std::size_t(n - 1 - i)] = w[std::size_t(i)];
  }
}

// exact-expectation oracle: E over the Gaussian channel by 2-D quadrature
double air_bmd_oracle(const Constellation& c, double noise_var) {
  std::vector<double> gx, gw;
  gauss_hermite(32, gx, gw);
  const double sigma = std::sqrt(noise_var / 2.0);  // per real dimension
  const std::size_t m = c.size();
  std::size_t bits = 0;
  while ((std::size_t(1) << bits) < m) ++bits;
  double expected_info = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (c.probs()[j] <= 0.0) continue;
    double acc = 0.0;
    for (std::size_t a = 0; a < gx.size(); ++a)
      for (std::size_t b = 0; b < gx.size(); ++b) {
        const cplx y = c.points()[j] +
                       cplx(sigma * std::sqrt(2.0) * gx[a], sigma * std::sqrt(2.0) * gx[b]);
        // same bit-metric evaluation, independent reimplementation
        std::vector<double> logw(m);
        double maxw = -1e300;
        for (std::size_t q = 0; q < m; ++q) {
          logw[q] = (c.probs()[q] > 0 ? std::log(c.probs()[q]) : -1e300) -
                    std::norm(y - c.points()[q]) / noise_var;
          maxw = std::max(maxw, logw[q]);
        }
        double tot = 0.0;
        for (std::size_t q = 0; q < m; ++q) tot += std::exp(logw[q] - maxw);
        double info = 0.0;
        for (std::size_t i = 0; i < bits; ++i) {
          const std::size_t bit = (j >> (bits - 1 - i)) & 1;
          double part = 0.0;
          for (std::size_t q = 0; q < m; ++q)
            if (((q >> (bits - 1 - i)) & 1) == bit) part += std::exp(logw[q] - maxw);
          info += -std::log2(part / tot);
        }
        acc += gw[a] * gw[b] * info;
      }
    expected_info += c.probs()[j] * acc / M_PI;
  }
  return entropy(c) - expected_info;
}

SymbolFrame frame_from(const Constellation& c, std::size_t n, std::uint64_t seed,
                       double pilot_rate = 0.0) {
  FrameConfig cfg;
  cfg.sign_seed = seed;
  cfg.pilot_rate = pilot_rate;
  return iid_frame(c, n, cfg);
}

SymbolFrame add_awgn(const SymbolFrame& tx, double noise_var, std::uint64_t seed) {
  SymbolFrame rx = tx;
  Rng rng(seed);
  const double s1 = std::sqrt(noise_var / 2.0);
  for (auto& v : rx.x) v += cplx(s1 * rng.normal(), s1 * rng.normal());
  return rx;
}

}  // namespace

TEST_CASE("noiseless air reaches the entropy") {
  const auto c = build_qam(16);
  const auto tx = frame_from(c, 4096, 1);
  const auto est = air_bmd(tx, tx, c, 1e-7);
  CHECK(est.air_per_2d == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("awgn air matches the quadrature oracle") {
  const auto c = build_qam(16);
  const double snr_db = 10.0;
  const double nv = std::pow(10.0, -snr_db / 10.0);
  const double oracle = air_bmd_oracle(c, nv);
  const auto tx = frame_from(c, 1 << 16, 2);
  const auto rx = add_awgn(tx, nv, 3);
  const auto est = air_bmd(tx, rx, c, nv);
  CHECK(est.ci.contains(oracle));
  CHECK(est.air_per_2d == doctest::Approx(oracle).epsilon(0.01));

  // shaped constellation at the same noise level
  const auto ap = mb_distribution(std::vector<double>{1, 3, 5, 7}, 0.03);
  const auto cs = build_qam(64, qam_probs_from_amplitudes(64, ap));
  const double oracle_s = air_bmd_oracle(cs, nv);
  const auto txs = frame_from(cs, 1 << 16, 4);
  const auto rxs = add_awgn(txs, nv, 5);
  const auto ests = air_bmd(txs, rxs, cs, nv);
  CHECK(ests.air_per_2d == doctest::Approx(oracle_s).epsilon(0.02));
}

TEST_CASE("air collapses to zero at very low snr") {
  const auto c = build_qam(16);
  const auto tx = frame_from(c, 1 << 14, 6);
  const auto rx = add_awgn(tx, 1e3, 7);
  const auto est = air_bmd(tx, rx, c, 1e3);
  CHECK(std::abs(est.air_per_2d) < 0.02);
}

TEST_CASE("air never exceeds the entropy") {
  Rng rng(8);
  const auto ap = mb_distribution(std::vector<double>{1, 3, 5, 7}, 0.05);
  const auto c = build_qam(64, qam_probs_from_amplitudes(64, ap));
  const double h = entropy(c);
  for (double nv : {1e-4, 1e-2, 0.1, 1.0, 10.0}) {
    const auto tx = frame_from(c, 8192, 9);
    const auto rx = add_awgn(tx, nv, rng.next_u64());
    const auto est = air_bmd(tx, rx, c, nv);
    CHECK(est.air_per_2d <= h + 1e-9);
  }
}

TEST_CASE("pilot adjustment scales by the data fraction") {
  const auto c = build_qam(16);
  const auto tx = frame_from(c, 4000, 10, 0.025);
  const double nv = 0.05;
  const auto rx = add_awgn(tx, nv, 11);
  const auto est = air_bmd(tx, rx, c, nv);
  CHECK(est.air_adjusted ==
        doctest::Approx(est.air_per_2d * double(tx.data_count()) / double(tx.size())));
  CHECK(est.air_adjusted < est.air_per_2d);
}

TEST_CASE("air input validation") {
  const auto c = build_qam(16);
  const auto tx = frame_from(c, 128, 12);
  auto rx = tx;
  rx.x.pop_back();
  rx.pilot_mask.pop_back();
  CHECK_THROWS(air_bmd(tx, rx, c, 0.1));
  CHECK_THROWS(air_bmd(tx, tx, c, 0.0));
  SymbolFrame empty;
  CHECK_THROWS(air_bmd(empty, empty, c, 0.1));
  CHECK_THROWS(estimate_noise_var(tx, rx));
}
