#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "attrsparse/theory.hpp"

using namespace attrsparse;

namespace {

const LossSpec kLosses[] = {{LossKind::logistic}, {LossKind::hinge}, {LossKind::softplus_hinge}};

FeatureSampler gaussian(Vector a, double sd = 1.0) {
  FeatureSampler s;
  s.sd.assign(a.size(), sd);
  s.a = std::move(a);
  return s;
}

}  // namespace

TEST_CASE("g'-bar estimates") {
  const FeatureSampler s = gaussian({1.0, -0.5, 0.2});
  const Estimate z = estimate_gprimebar(LossSpec::logistic(), Vector(3, 0.0), 0.1, s, 20000, 1);
  CHECK(z.mean == 0.5);
  CHECK(z.se == 0.0);

  // Hinge in its flat region: margin eps|w|_1 - y<w,x> is far below -1.
  FeatureSampler tight = gaussian({1.0}, 0.01);
  const Estimate flat = estimate_gprimebar(LossSpec::parse("hinge"), {10.0}, 0.0, tight, 20000, 2);
  CHECK(flat.mean == 0.0);

  // Self-consistency against a 10x larger independent run.
  const Vector w{0.7, -0.3, 1.1};
  const Estimate small = estimate_gprimebar(LossSpec::logistic(), w, 0.2, s, 20000, 3);
  const Estimate big = estimate_gprimebar(LossSpec::logistic(), w, 0.2, s, 200000, 4);
  CHECK(small.mean >= 0.0);
  CHECK(std::abs(small.mean - big.mean) <= 3.0 * std::hypot(small.se, big.se));

  // Chunked sampling: the result does not depend on anything but the seed.
  CHECK(estimate_gprimebar(LossSpec::logistic(), w, 0.2, s, 20000, 3).mean == small.mean);
}

TEST_CASE("expected update at w = 0 is g'(0) a_i") {
  const FeatureSampler s = gaussian({0.8, 0.0, -0.4, 0.1});
  for (double eps : {0.0, 0.3}) {
    const auto est = expected_update(LossSpec::logistic(), Vector(4, 0.0), eps, s, 100000, 7);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(est[i].mean - 0.5 * s.a[i]) <= 3.0 * est[i].se);
  }
  for (const auto& spec : kLosses) {
    for (const auto& r : check_theorem1_zero(spec, 0.1, s, 100000, 5)) {
      CAPTURE(r.config);
      CHECK(r.pass);
      CHECK(r.samples == 100000);
    }
  }
}

TEST_CASE("bound: misaligned and over-budget weights shrink") {
  const FeatureSampler s = gaussian({0.5, 0.3, 0.1, 0.2});
  WeightedAverageSpec ws{{0, 1, 2, 3}, {-0.4, -0.2, -0.3, -0.1}};
  const auto est = expected_update(LossSpec::logistic(), ws.w, 0.2, s, 50000, 2);
  Vector means;
  for (const auto& e : est) means.push_back(e.mean);
  CHECK(ws.average(means) < 0.0);
  CHECK(check_theorem1_bound(LossSpec::logistic(), ws, 0.2, s, 50000, 2).pass);

  // Aligned weights but eps above the weighted strength: bound is negative.
  WeightedAverageSpec aligned{{0, 1, 2, 3}, {0.4, 0.2, 0.3, 0.1}};
  const double abar = aligned.average(s.a);
  CHECK(abar < 0.4);
  const auto r = check_theorem1_bound(LossSpec::logistic(), aligned, 0.4, s, 50000, 3);
  CHECK(r.bound < 0.0);
  CHECK(r.estimate < 0.0);
  CHECK(r.pass);

  CHECK_THROWS_AS((WeightedAverageSpec{{}, {1.0}}.validate()), ConfigError);
  CHECK_THROWS_AS((WeightedAverageSpec{{0}, {0.0, 1.0}}.validate()), ConfigError);
}

TEST_CASE("bound gap closes as the weights shrink") {
  FeatureSampler s = gaussian({0.6, -0.2, 0.4, 0.1, 0.3});
  s.in_s = {true, true, true, false, false};
  s.rho = 0.7;
  const WeightedAverageSpec ws{{0, 1, 2}, {0.9, 0.5, -0.4, 0.3, -0.2}};
  for (const auto& spec : kLosses) {
    CAPTURE(spec.name());
    const LimitCheck lc = check_theorem1_limit(spec, ws, 0.15, s, 60000, 11);
    CHECK(lc.pass());
    REQUIRE(lc.gap.size() == 5);
    CHECK(std::abs(lc.gap[3].mean) <= 3.0 * lc.gap[3].se);  // scale 1e-3
    CHECK(std::isfinite(lc.gap.back().mean));
    // Same draws as the plain bound check on the scaled weights.
    WeightedAverageSpec scaled = ws;
    for (std::size_t i : ws.S) scaled.w[i] *= 0.1;
    const auto r = check_theorem1_bound(spec, scaled, 0.15, s, 60000, 11);
    CHECK(lc.gap[1].mean == doctest::Approx(r.estimate - r.bound).epsilon(1e-9));
  }
  CHECK_THROWS_AS(check_theorem1_limit(kLosses[0], ws, 0.15, s, 100, 1, {1.0, -0.1}), ConfigError);
}

TEST_CASE("lemma checks") {
  auto normal_z = [](Rng& r) {
    LemmaSample s;
    s.y = r.bernoulli(0.5) ? 1 : -1;
    s.z = 0.7 + 1.3 * r.normal();
    s.v = s.y + r.normal();
    return s;
  };
  SUBCASE("constant f gives exactly zero covariance") {
    const auto r = check_lemma_exp_bound([](double, double) { return 2.5; }, normal_z, 10000, 1);
    CHECK(r.pass);
    CHECK(r.detail == "covariance 0.0");
  }
  SUBCASE("constant Z gives equality") {
    auto constant = [](Rng& r) {
      LemmaSample s;
      s.z = 1.5;
      s.v = r.normal();
      return s;
    };
    const auto r =
        check_lemma_exp_bound([](double z, double v) { return -z + v; }, constant, 10000, 2);
    CHECK(r.pass);
    CHECK(r.estimate == doctest::Approx(r.bound).epsilon(1e-12));
  }
  SUBCASE("f = -Z matches Gaussian moments") {
    const auto r = check_lemma_exp_bound([](double z, double) { return -z; }, normal_z, 200000, 3);
    CHECK(r.pass);
    // E[Z f] = -(m^2 + s^2) = -(0.49 + 1.69); Var(Z^2) = 2s^4 + 4 m^2 s^2.
    const double sd_z2 = std::sqrt(2 * std::pow(1.3, 4) + 4 * 0.49 * 1.69);
    CHECK(std::abs(r.estimate + 2.18) <= 3.0 * sd_z2 / std::sqrt(200000.0));
    CHECK(r.estimate < r.bound);
  }
}

TEST_CASE("stable-IG identity: hand example and edge cases") {
  const auto c = check_theorem3_identity(LossSpec::logistic(), {1.0, -1.0}, {0.2, 0.3}, 1, 0.1);
  const double expect = std::log1p(std::exp(0.3));
  CHECK(c.lhs == doctest::Approx(expect).epsilon(1e-12));
  CHECK(c.rhs == doctest::Approx(expect).epsilon(1e-12));
  CHECK(c.residual <= 1e-9);
  for (const auto& spec : kLosses) {
    const auto e0 = check_theorem3_identity(spec, {0.4, 2.0}, {1.0, -0.5}, -1, 0.0);
    CHECK(e0.lhs == spec.g(-(-1) * (0.4 - 1.0)));
    CHECK(e0.rhs == e0.lhs);
    const auto w0 = check_theorem3_identity(spec, {0.0, 0.0}, {1.0, -0.5}, 1, 0.3);
    CHECK(w0.lhs == spec.g(0.0));
    CHECK(w0.rhs == spec.g(0.0));
  }
}

TEST_CASE("stable-IG identity over random draws, with corner search") {
  Rng rng(77);
  for (const auto& spec : kLosses) {
    CAPTURE(spec.name());
    for (int t = 0; t < 300; ++t) {
      const std::size_t d = 1 + rng.index(8);
      Vector w(d), x(d);
      for (std::size_t i = 0; i < d; ++i) {
        w[i] = rng.normal();
        x[i] = rng.normal();
      }
      const int y = rng.bernoulli(0.5) ? 1 : -1;
      const double eps = rng.uniform(0.0, 0.5);
      CHECK(check_theorem3_identity(spec, w, x, y, eps).residual <= 1e-9);
      const CornerSearch cs = theorem3_corner_search(spec, w, x, y, eps);
      CHECK(cs.agrees);
      CHECK(cs.best >= cs.at_maximizer - 1e-12);
    }
  }
  CHECK_THROWS_AS(theorem3_corner_search(LossSpec::logistic(), Vector(17, 1.0), Vector(17, 0.0), 1, 0.1),
                  ConfigError);
}

TEST_CASE("suites and report") {
  const auto t3 = run_theorem3_suite(50, 1);
  CHECK(t3.size() == 3);
  for (const auto& r : t3) CHECK(r.pass);
  const auto lemma = run_lemma_suite(5, 20000, 1);
  for (const auto& r : lemma) CHECK(r.pass);
  const auto j = nlohmann::json::parse(theorem_report_json(t3));
  CHECK(j["all_pass"] == true);
  CHECK(j["checks"].size() == 3);
  CHECK(j["checks"][0]["theorem"] == "thm3");
}

TEST_CASE("sampler validation and the correlated complement") {
  FeatureSampler s = gaussian({1.0, 0.0, 0.0});
  s.in_s = {true, false, false};
  s.rho = 0.8;
  CHECK_NOTHROW(s.validate());
  // Complement coordinates are correlated with each other at rho^2 * sd^2.
  Rng rng(5);
  double sxy = 0.0, s01 = 0.0;
  const int n = 100000;
  Vector x(3);
  for (int k = 0; k < n; ++k) {
    s.draw(rng, x);
    sxy += x[1] * x[2];
    s01 += (x[0] - 0.0) * x[1];
  }
  CHECK(sxy / n == doctest::Approx(0.64).epsilon(0.05));
  // Within each class x0 - a0 y is independent of x1; unconditionally x1 has mean 0.
  CHECK(std::abs(s01 / n) <= 5.0 / std::sqrt(static_cast<double>(n)) * 1.5);
  FeatureSampler bad = gaussian({1.0});
  bad.sd = {0.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = gaussian({1.0});
  bad.class_balance = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
