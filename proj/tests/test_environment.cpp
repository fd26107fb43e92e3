#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "bpre/environment.hpp"
#include "bpre/error.hpp"
#include "test_laws.hpp"

using namespace bpre;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidConfig;
}

}  // namespace

TEST_CASE("offspring moments") {
  const OffspringDistribution a({{1, 0.5}, {2, 0.5}});
  CHECK(a.mean() == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(a.p1() == 0.5);
  CHECK(a.p0() == 0.0);
  CHECK(a.second_moment() == doctest::Approx(2.5));

  const OffspringDistribution dirac({{2, 1.0}});
  CHECK(dirac.mean() == 2.0);
  CHECK(dirac.p1() == 0.0);
  CHECK(dirac.is_dirac());

  const OffspringDistribution sub({{0, 0.5}, {1, 0.5}});
  CHECK(sub.mean() == 0.5);
  CHECK(sub.p0() == 0.5);
}

TEST_CASE("offspring atoms are sorted and mean recomputes") {
  const OffspringDistribution d({{7, 0.1}, {0, 0.2}, {3, 0.3}, {1, 0.4}});
  std::uint64_t prev = 0;
  bool first = true;
  double mass = 0.0;
  for (const auto& a : d.atoms()) {
    if (!first) CHECK(a.k > prev);
    prev = a.k;
    first = false;
    mass += a.prob;
  }
  CHECK(std::abs(mass - 1.0) <= 1e-12);
  CHECK(std::abs(d.mean() - d.recompute_mean()) <= 1e-12);
}

TEST_CASE("offspring validation") {
  CHECK(code_of([] { OffspringDistribution({}); }) == ErrorCode::EmptyPmf);
  CHECK(code_of([] { OffspringDistribution({{1, -0.1}, {2, 1.1}}); }) == ErrorCode::NegativeProb);
  CHECK(code_of([] { OffspringDistribution({{1, 0.5}, {1, 0.5}}); }) == ErrorCode::DuplicateKey);
  CHECK(code_of([] { OffspringDistribution({{1, 0.5}, {2, 0.4}}); }) == ErrorCode::MassNotOne);
  // Drift below 1e-9 is normalized away.
  const OffspringDistribution ok({{1, 0.5}, {2, 0.5 + 5e-10}});
  CHECK(std::abs(ok.prob(1) + ok.prob(2) - 1.0) <= 1e-15);
}

TEST_CASE("G2 environment") {
  const EnvironmentLaw g2 = laws::g2();
  CHECK(g2[0].log_mean == doctest::Approx(std::log(1.5)));
  CHECK(g2[1].log_mean == doctest::Approx(std::log(3.0)));
  CHECK(g2.lbar() == doctest::Approx((std::log(1.5) + std::log(3.0)) / 2).epsilon(1e-15));
  CHECK(g2.mean_p1() == doctest::Approx(0.25));
  CHECK(g2.strongly_supercritical());
  CHECK(g2.bound_mean() == 3.0);
  CHECK(g2.bound_second_moment() == doctest::Approx(0.5 * 4 + 0.5 * 16));
}

TEST_CASE("Dirac environment reduces to Galton-Watson") {
  const EnvironmentLaw gw({{1.0, OffspringDistribution({{1, 0.7}, {2, 0.3}})}});
  CHECK(gw.lbar() == doctest::Approx(std::log(1.3)));
  CHECK(gw.mean_p1() == doctest::Approx(0.7));
  CHECK(gw.degenerate());
}

TEST_CASE("subcritical environment flags") {
  const EnvironmentLaw sub = laws::subcrit();
  CHECK(sub.all_noncrit_below());
  CHECK_FALSE(sub.strongly_supercritical());
}

TEST_CASE("environment validation") {
  const OffspringDistribution d({{1, 1.0}});
  CHECK(code_of([&] { EnvironmentLaw({{0.5, d}, {0.4, d}}); }) == ErrorCode::WeightsNotOne);
  CHECK(code_of([&] { EnvironmentLaw({{-0.5, d}, {1.5, d}}); }) == ErrorCode::InvalidWeight);
  CHECK(code_of([] { EnvironmentLaw({{1.0, OffspringDistribution({{0, 1.0}})}}); }) == ErrorCode::ZeroMeanComponent);
}

TEST_CASE("hull ordering and mean_p1 range on assorted laws") {
  for (const auto& env : laws::assorted()) {
    CHECK(env.lmin() <= env.lbar());
    CHECK(env.lbar() <= env.lmax());
    CHECK((env.lmin() == env.lbar()) == env.degenerate());
    CHECK(env.mean_p1() >= 0.0);
    CHECK(env.mean_p1() <= 1.0);
    bool any_p1 = false;
    for (const auto& c : env.components()) any_p1 = any_p1 || c.dist.p1() > 0.0;
    CHECK((env.mean_p1() == 0.0) == !any_p1);
  }
}

TEST_CASE("holding probability") {
  const EnvironmentLaw g2 = laws::g2();
  CHECK(g2.holding_probability(1) == doctest::Approx(0.25));
  CHECK(g2.holding_probability(3) == doctest::Approx(0.5 * 0.125));
}

TEST_CASE("lineage law is the weighted mixture") {
  const OffspringDistribution l = laws::g2().lineage_law();
  CHECK(l.prob(1) == doctest::Approx(0.25));
  CHECK(l.prob(2) == doctest::Approx(0.5));
  CHECK(l.prob(4) == doctest::Approx(0.25));
}

TEST_CASE("JSON round trip keeps every scalar") {
  for (const auto& env : laws::assorted()) {
    const EnvironmentLaw back = parse_environment(serialize_environment(env));
    REQUIRE(back.size() == env.size());
    CHECK(std::abs(back.lbar() - env.lbar()) <= 1e-15);
    CHECK(std::abs(back.mean_p1() - env.mean_p1()) <= 1e-15);
    for (std::size_t i = 0; i < env.size(); ++i) {
      CHECK(back[i].weight == env[i].weight);
      CHECK(back[i].dist == env[i].dist);
    }
    CHECK(back.fingerprint() == env.fingerprint());
  }
}

TEST_CASE("JSON errors") {
  CHECK(code_of([] { parse_environment("{not json"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_environment(R"({"envs": []})"); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_environment(R"({"environments": [{"weight": 1, "pmf": {"x": 1}}]})"); }) ==
        ErrorCode::InvalidConfig);
  CHECK(code_of([] { parse_environment(R"({"environments": [{"weight": 1, "pmf": {"1": 0.5}}]})"); }) ==
        ErrorCode::MassNotOne);
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}
