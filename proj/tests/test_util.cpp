#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "shapinglab/bigint.hpp"
#include "shapinglab/fft.hpp"
#include "shapinglab/rng.hpp"
#include "shapinglab/stats.hpp"

using namespace shapinglab;

TEST_CASE("biguint arithmetic basics") {
  BigUint a(0), b(5);
  CHECK(a.is_zero());
  CHECK(a < b);
  a += b;
  CHECK(a == b);
  a.mul_small(1000000007ULL);
  CHECK(a.to_string() == "5000000035");
  CHECK(a.div_small(5) == 0);
  CHECK(a.to_string() == "1000000007");

  // 100! has 525 bits and ends in 24 zeros
  BigUint f(1);
  for (std::uint64_t k = 2; k <= 100; ++k) f.mul_small(k);
  CHECK(f.bit_length() == 525);
  std::string s = f.to_string();
  CHECK(s.size() == 158);
  CHECK(s.substr(s.size() - 24) == std::string(24, '0'));
  CHECK(f.log2() == doctest::Approx(std::lgamma(101.0) / std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("biguint shift and bits roundtrip") {
  BigUint x(0x123456789abcdefULL);
  BigUint y = x;
  y <<= 100;
  for (int i = 0; i < 57; ++i) CHECK(y.bit(100 + i) == x.bit(i));
  CHECK(y.bit_length() == x.bit_length() + 100);
  y -= BigUint(1);
  CHECK(y.bit(0));
}

TEST_CASE("multinomial coefficients") {
  CHECK(multinomial({2, 2}).to_u64() == 6);
  CHECK(multinomial({1, 1, 1}).to_u64() == 6);
  CHECK(multinomial({10, 0}).to_u64() == 1);
  CHECK(multinomial({3, 2, 1}).to_u64() == 60);
  // C(180, 90) spot check against known value of central binomial bit length
  const BigUint c = multinomial({90, 90});
  CHECK(c.log2() == doctest::Approx(176.0).epsilon(0.05));
}

TEST_CASE("fft inverts and matches dft") {
  Rng rng(7);
  const std::size_t n = 256;
  std::vector<cplx> x(n);
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  auto y = x;
  FftPlan plan(n);
  plan.forward(y.data());
  // direct DFT check on a few bins
  for (std::size_t k : {std::size_t(0), std::size_t(1), std::size_t(100)}) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * std::polar(1.0, -2.0 * M_PI * double(i * k % n) / double(n));
    CHECK(std::abs(acc - y[k]) < 1e-9);
  }
  plan.inverse(y.data());
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y[i] - x[i]) < 1e-12);
}

TEST_CASE("rng determinism and moments") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(5);
  std::vector<double> xs(20000);
  for (auto& v : xs) v = r.normal();
  CHECK(mean(xs) == doctest::Approx(0.0).epsilon(0.05));
  CHECK(variance(xs) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("least squares recovers a plane") {
  Rng rng(3);
  const std::size_t n = 200;
  std::vector<double> x(n * 2), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i * 2] = rng.normal();
    x[i * 2 + 1] = rng.normal();
    y[i] = 2.5 * x[i * 2] - 1.25 * x[i * 2 + 1] + 1e-9 * rng.normal();
  }
  const auto beta = least_squares(x, y, 2);
  CHECK(beta[0] == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(beta[1] == doctest::Approx(-1.25).epsilon(1e-6));
}

TEST_CASE("spearman and kmeans") {
  std::vector<double> a{1, 2, 3, 4, 5}, b{10, 20, 30, 40, 51};
  CHECK(spearman(a, b) == doctest::Approx(1.0));
  std::vector<double> data{0.1, 0.11, 0.12, 5.0, 5.1, 5.2, 9.9, 10.0};
  const auto km = kmeans_1d(data, 3);
  CHECK(km.centers.size() == 3);
  CHECK(km.assign[0] == km.assign[1]);
  CHECK(km.assign[3] == km.assign[4]);
  CHECK(km.assign[0] != km.assign[3]);
  CHECK(km.assign[6] == km.assign[7]);
}

TEST_CASE("bootstrap interval brackets a known mean") {
  Rng rng(11);
  std::vector<double> xs(500);
  for (auto& v : xs) v = 3.0 + rng.normal();
  Rng boot(12);
  const auto ci = bootstrap_mean_ci(xs, boot);
  CHECK(ci.contains(mean(xs)));
  CHECK(ci.hi - ci.lo < 0.4);
}
