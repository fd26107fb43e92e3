#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "bpre/oracle.hpp"
#include "bpre/parallel.hpp"
#include "bpre/population.hpp"
#include "bpre/rng.hpp"
#include "bpre/error.hpp"
#include "bpre/simulator.hpp"
#include "test_laws.hpp"

using namespace bpre;

TEST_CASE("Philox is a pure function of key, stream and step") {
  Philox a = make_stream(42, 7, 3);
  Philox b = make_stream(42, 7, 3);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  std::set<std::uint64_t> firsts;
  for (std::uint64_t seed : {0, 1}) {
    for (std::uint64_t r : {0, 1}) {
      for (std::uint32_t s : {0u, 1u, kAuxStep}) firsts.insert(make_stream(seed, r, s)());
    }
  }
  CHECK(firsts.size() == 12);
}

TEST_CASE("Philox uniforms look uniform") {
  Philox g = make_stream(1, 0, 0);
  const int n = 200000;
  double sum = 0.0;
  std::vector<int> bins(10, 0);
  for (int i = 0; i < n; ++i) {
    const double u = g.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    ++bins[static_cast<int>(u * 10)];
  }
  CHECK(std::abs(sum / n - 0.5) <= 3.0 * std::sqrt(1.0 / 12.0 / n));
  double chi2 = 0.0;
  for (int b : bins) chi2 += (b - n / 10.0) * (b - n / 10.0) / (n / 10.0);
  CHECK(chi2 < 27.88);  // 99.9% quantile, 9 degrees of freedom
}

TEST_CASE("population thresholds") {
  CHECK(floor_exp(0.0) == 1);
  CHECK(floor_exp(-1.0) == 0);
  CHECK(floor_exp(std::log(10.0)) == 10);
  CHECK(ceil_exp(std::log(10.0)) == 10);
  CHECK(floor_exp(1.0) == 2);
  CHECK(ceil_exp(1.0) == 3);
  const Population big = floor_exp(120.0);
  CHECK(std::abs(log_population(big) - 120.0) <= 1e-12);
  CHECK(ceil_exp(120.0) >= big);
  CHECK(log_population(Population(0)) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("branch_step deterministic cases") {
  Philox g = make_stream(0, 0, 0);
  CHECK(branch_step(0, OffspringDistribution({{1, 0.5}, {2, 0.5}}), g) == 0);
  CHECK(branch_step(5, OffspringDistribution({{2, 1.0}}), g) == 10);
  const Population huge = Population(1) << 200;
  CHECK(branch_step(huge, OffspringDistribution({{3, 1.0}}), g) == huge * 3);
}

TEST_CASE("branch_step mean ratio at a large population") {
  const OffspringDistribution d({{1, 0.5}, {2, 0.5}});
  const int reps = 10000;
  const std::uint64_t z = 1000000;
  double sum = 0.0;
  for (int r = 0; r < reps; ++r) {
    Philox g = make_stream(3, r, 0);
    sum += static_cast<double>(branch_step(z, d, g).convert_to<std::uint64_t>()) / z;
  }
  // Per-individual variance 0.25, so z'/z has variance 0.25 / z.
  const double sigma = std::sqrt(0.25 / z / reps);
  CHECK(std::abs(sum / reps - 1.5) <= 3.0 * sigma);
}

TEST_CASE("binomial sampling beyond the exact range") {
  const Population trials = Population(1) << 100;
  Philox g = make_stream(9, 0, 0);
  const int reps = 2000;
  double sum = 0.0;
  for (int r = 0; r < reps; ++r) {
    const Population k = sample_binomial(trials, 0.3, g);
    CHECK(k <= trials);
    sum += (k.convert_to<long double>() / trials.convert_to<long double>());
  }
  CHECK(std::abs(sum / reps - 0.3) <= 1e-9);
  const Population rare = sample_binomial(trials, 1e-29, g);
  CHECK(rare <= 1000);
}

TEST_CASE("Dirac trajectory") {
  const Trajectory t = run(SimConfig{laws::dirac(2), 10, 1, 0, 1, 1});
  REQUIRE(t.z.size() == 11);
  REQUIRE(t.env_idx.size() == 10);
  REQUIRE(t.s.size() == 11);
  for (int k = 0; k <= 10; ++k) {
    CHECK(t.z[k] == (Population(1) << k));
    CHECK(t.s[k] == doctest::Approx(k * std::log(2.0)));
  }
}

TEST_CASE("trajectory shape and monotonicity") {
  const SimConfig cfg{laws::two_level(), 30, 3, 11, 1, 1};
  for (std::uint64_t r = 0; r < 50; ++r) {
    const Trajectory t = run(cfg, r);
    CHECK(t.horizon() == 30);
    CHECK(t.s[0] == 0.0);
    CHECK(t.z[0] == 3);
    for (int k = 0; k < 30; ++k) CHECK(t.z[k + 1] >= t.z[k]);
  }
}

TEST_CASE("holding probability from simulation") {
  const SimConfig cfg{laws::g2(), 3, 1, 5, 100000, 1};
  const EstimatorResult e = run_batch(cfg, [](const Trajectory& t) { return t.z.back() == 1; });
  const double p = std::pow(0.25, 3);
  CHECK(std::abs(e.estimate - p) <= 3.0 * std::sqrt(p * (1 - p) / 100000));
}

TEST_CASE("law of large numbers for the log-mean walk") {
  const EnvironmentLaw g2 = laws::g2();
  const SimConfig cfg{g2, 20, 1, 6, 1, 1};
  const int reps = 10000;
  double sum = 0.0;
  for (int r = 0; r < reps; ++r) sum += run(cfg, r).s.back() / 20;
  const double var_l = 0.25 * std::pow(std::log(3.0) - std::log(1.5), 2);
  CHECK(std::abs(sum / reps - g2.lbar()) <= 3.0 * std::sqrt(var_l / 20 / reps));
}

TEST_CASE("run_batch edge events") {
  const SimConfig cfg{laws::g2(), 4, 1, 0, 50, 1};
  const EstimatorResult all = run_batch(cfg, [](const Trajectory&) { return true; });
  CHECK(all.estimate == 1.0);
  CHECK(all.std_error == 0.0);
  const SimConfig det{laws::dirac(2), 6, 3, 0, 20, 1};
  const EstimatorResult d = run_batch(det, [](const Trajectory& t) { return t.z.back() == 3 * 64; });
  CHECK(d.estimate == 1.0);
}

TEST_CASE("run_batch agrees with the exact oracle") {
  const EnvironmentLaw g2 = laws::g2();
  const double c = 0.4;
  const int n = 5;
  const Population x = floor_exp(c * n);
  const SimConfig cfg{g2, n, 1, 8, 100000, 1};
  const EstimatorResult e = run_batch(cfg, [&](const Trajectory& t) { return t.z.back() <= x; });
  const double p = exact_population_tail(g2, n, 1, c, Side::Lower);
  CHECK(std::abs(e.estimate - p) <= 3.0 * std::sqrt(p * (1 - p) / 100000));
}

TEST_CASE("random lineage draws from the mixture law") {
  Philox g = make_stream(12, 0, kAuxStep);
  const int n = 100000;
  const auto draws = random_lineage(laws::g2(), n, g);
  int ones = 0;
  int fours = 0;
  for (auto k : draws) {
    ones += k == 1;
    fours += k == 4;
  }
  const double sigma = std::sqrt(0.25 * 0.75 / n);
  CHECK(std::abs(ones / double(n) - 0.25) <= 3 * sigma);
  CHECK(std::abs(fours / double(n) - 0.25) <= 3 * sigma);
  Philox h = make_stream(12, 0, 0);
  for (auto k : random_lineage(laws::dirac(2), 50, h)) CHECK(k == 2);
}

TEST_CASE("conditional mean of one generation") {
  const EnvironmentLaw g2 = laws::g2();
  const SimConfig cfg{g2, 6, 1, 13, 1, 1};
  // E[Z_{k+1} / Z_k | env] = m(env): average the ratio per environment.
  std::vector<double> sum(2, 0.0);
  std::vector<double> sum_sq(2, 0.0);
  std::vector<int> count(2, 0);
  for (int r = 0; r < 10000; ++r) {
    const Trajectory t = run(cfg, r);
    const double ratio = static_cast<double>(t.z[6].convert_to<std::uint64_t>()) /
                         static_cast<double>(t.z[5].convert_to<std::uint64_t>());
    const auto i = t.env_idx[5];
    sum[i] += ratio;
    sum_sq[i] += ratio * ratio;
    ++count[i];
  }
  for (int i = 0; i < 2; ++i) {
    const double mean = sum[i] / count[i];
    const double var = sum_sq[i] / count[i] - mean * mean;
    CHECK(std::abs(mean - g2[i].dist.mean()) <= 3.0 * std::sqrt(var / count[i]));
  }
}

TEST_CASE("normalized population is a martingale") {
  const SimConfig cfg{laws::g2(), 8, 2, 14, 1, 1};
  const int reps = 10000;
  std::vector<double> w;
  for (int r = 0; r < reps; ++r) {
    const Trajectory t = run(cfg, r);
    w.push_back(static_cast<double>(t.z.back().convert_to<std::uint64_t>()) * std::exp(-t.s.back()));
  }
  double mean = 0.0;
  for (double x : w) mean += x;
  mean /= reps;
  double var = 0.0;
  for (double x : w) var += (x - mean) * (x - mean);
  var /= reps - 1;
  CHECK(std::abs(mean - 2.0) <= 3.0 * std::sqrt(var / reps));
}

TEST_CASE("take-off time") {
  std::vector<Population> z{1, 1, 2, 5, 11, 30};
  CHECK(take_off_time(z, 1) == 2);
  CHECK(take_off_time(z, 10) == 4);
  CHECK(take_off_time(z, 100) == 5);
  CHECK(take_off_time(z, 0) == 0);
}

TEST_CASE("results do not depend on the worker count") {
  SimConfig cfg{laws::two_level(), 25, 1, 21, 64, 1};
  std::vector<std::string> one;
  for (std::uint64_t r = 0; r < 64; ++r) one.push_back(to_decimal(run(cfg, r).z.back()));
  const auto many = parallel_map<std::string>(64, 8, [&](std::uint64_t r) { return to_decimal(run(cfg, r).z.back()); });
  CHECK(one == many);
  cfg.workers = 8;
  const EstimatorResult a = run_batch(cfg, [](const Trajectory& t) { return t.z.back() < 1000000; });
  cfg.workers = 1;
  const EstimatorResult b = run_batch(cfg, [](const Trajectory& t) { return t.z.back() < 1000000; });
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("simulation config validation") {
  CHECK_THROWS_AS(validate(SimConfig{laws::g2(), 0, 1, 0, 1, 1}), Error);
  CHECK_THROWS_AS(validate(SimConfig{laws::g2(), 3, 0, 0, 1, 1}), Error);
  CHECK_THROWS_AS(validate(SimConfig{laws::g2(), 3, 1, 0, 0, 1}), Error);
}
