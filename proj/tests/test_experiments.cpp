#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "shapinglab/experiments.hpp"

using namespace shapinglab;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("unknown preset is rejected with the available names") {
  ExperimentConfig cfg;
  cfg.preset = "does-not-exist";
  try {
    run_preset(cfg);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("rate-loss-moments") != std::string::npos);
  }
}

TEST_CASE("preset output is byte-identical for a fixed seed") {
  ExperimentConfig cfg;
  cfg.preset = "rate-loss-moments";
  cfg.seed = 42;
  const auto r1 = run_preset(cfg);
  const auto r2 = run_preset(cfg);
  REQUIRE(r1.points.size() == r2.points.size());
  write_results(r1, "/tmp/shapinglab_runA");
  write_results(r2, "/tmp/shapinglab_runB");
  CHECK(slurp("/tmp/shapinglab_runA/results.csv") == slurp("/tmp/shapinglab_runB/results.csv"));
  std::filesystem::remove_all("/tmp/shapinglab_runA");
  std::filesystem::remove_all("/tmp/shapinglab_runB");
}

TEST_CASE("comparator passes identical files and flags shifted series") {
  ExperimentConfig cfg;
  cfg.preset = "complexity";
  auto r = run_preset(cfg);
  write_results(r, "/tmp/shapinglab_base");
  const auto same = compare_results("/tmp/shapinglab_base/results.csv",
                                    "/tmp/shapinglab_base/results.csv", 1e-12);
  CHECK(same.pass);
  for (const auto& [series, dev] : same.max_deviation) CHECK(dev == 0.0);

  // shift one series beyond tolerance
  for (auto& p : r.points)
    if (p.series == "n-selected") p.y += 5.0;
  write_results(r, "/tmp/shapinglab_shift");
  const auto diff = compare_results("/tmp/shapinglab_base/results.csv",
                                    "/tmp/shapinglab_shift/results.csv", 1e-6);
  CHECK_FALSE(diff.pass);
  bool named = false;
  for (const auto& f : diff.failures)
    if (f.find("n-selected") != std::string::npos) named = true;
  CHECK(named);
  std::filesystem::remove_all("/tmp/shapinglab_base");
  std::filesystem::remove_all("/tmp/shapinglab_shift");
}

TEST_CASE("ci overlap mode accepts intersecting intervals") {
  RunResult a;
  a.preset = "toy";
  a.points.push_back({"s", 1, 0.0, 1.00, 0.95, 1.05});
  RunResult b = a;
  b.points[0].y = 1.04;
  b.points[0].ci_lo = 0.99;
  b.points[0].ci_hi = 1.09;
  write_results(a, "/tmp/shapinglab_ci_a");
  write_results(b, "/tmp/shapinglab_ci_b");
  const auto rep = compare_results("/tmp/shapinglab_ci_a/results.csv",
                                   "/tmp/shapinglab_ci_b/results.csv", 1e-9, true);
  CHECK(rep.pass);
  // disjoint intervals fail
  b.points[0].ci_lo = 1.50;
  b.points[0].ci_hi = 1.60;
  b.points[0].y = 1.55;
  write_results(b, "/tmp/shapinglab_ci_b");
  const auto rep2 = compare_results("/tmp/shapinglab_ci_a/results.csv",
                                    "/tmp/shapinglab_ci_b/results.csv", 1e-9, true);
  CHECK_FALSE(rep2.pass);
  std::filesystem::remove_all("/tmp/shapinglab_ci_a");
  std::filesystem::remove_all("/tmp/shapinglab_ci_b");
}

TEST_CASE("csv schema is validated") {
  std::filesystem::create_directories("/tmp/shapinglab_bad");
  std::ofstream os("/tmp/shapinglab_bad/results.csv");
  os << "wrong,header\n1,2\n";
  os.close();
  CHECK_THROWS(read_results_csv("/tmp/shapinglab_bad/results.csv"));
  std::filesystem::remove_all("/tmp/shapinglab_bad");
}

TEST_CASE("mb lambda solver hits the target entropy") {
  const std::vector<int> levels{1, 3, 5, 7};
  for (double target : {1.2, 1.5, 1.9}) {
    const double lambda = mb_lambda_for_entropy(levels, target);
    const auto p = mb_distribution(std::vector<double>{1, 3, 5, 7}, lambda);
    CHECK(entropy_bits(p) == doctest::Approx(target).epsilon(1e-6));
  }
}

TEST_CASE("source frames are deterministic and sized exactly") {
  SourceSpec src;
  src.kind = SourceSpec::Kind::Ccdm;
  src.block_length = 32;
  FrameConfig fc;
  const auto a = source_frame(src, 1000, fc, 5);
  const auto b = source_frame(src, 1000, fc, 5);
  REQUIRE(a.size() == 1000);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.x[k] == b.x[k]);
  const auto c = source_frame(src, 1000, fc, 6);
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a.x[k] != c.x[k]) differs = true;
  CHECK(differs);

  SourceSpec mb;
  mb.kind = SourceSpec::Kind::IidMb;
  const auto d = source_frame(mb, 777, fc, 9);
  CHECK(d.size() == 777);
}

TEST_CASE("complexity preset reproduces the report formulas") {
  ExperimentConfig cfg;
  cfg.preset = "complexity";
  const auto r = run_preset(cfg);
  for (const auto& p : r.points) {
    if (p.series != "n-selected") continue;
    LinkConfig l = cfg.link;
    l.n_spans = int(std::llround(p.x / l.span_length_km));
    const auto rep = complexity_report(window_sizes(l).w_mem, 16);
    CHECK(p.y == doctest::Approx(double(rep.n_selected)));
  }
}

TEST_CASE("edi-law preset exhibits the minus-one slope") {
  ExperimentConfig cfg;
  cfg.preset = "edi-law";
  const auto r = run_preset(cfg);
  std::vector<double> x, y;
  for (const auto& p : r.points)
    if (p.series == "edi-empirical") {
      x.push_back(p.x);
      y.push_back(p.y);
    }
  REQUIRE(x.size() == 4);
  const auto fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("experiment config validation") {
  ExperimentConfig cfg;
  cfg.preset = "";
  CHECK_THROWS(cfg.validate());
  cfg.preset = "x";
  cfg.n_seeds = 0;
  CHECK_THROWS(cfg.validate());
}
