#include <doctest.h>

#include <cmath>

#include "attrsparse/adversarial.hpp"
#include "attrsparse/rng.hpp"
#include "test_util.hpp"

using namespace attrsparse;

namespace {

const LossSpec kLosses[] = {{LossKind::logistic}, {LossKind::hinge}, {LossKind::softplus_hinge}};

Vector random_vec(Rng& rng, std::size_t d) {
  Vector v(d);
  for (auto& x : v) x = rng.normal();
  return v;
}

// Brute-force max of the loss over the 2^d corners of the eps box.
double corner_max(const LossSpec& spec, const LinearModel& m, const Vector& x, int y, double eps) {
  const std::size_t d = x.size();
  double best = -INFINITY;
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    Vector p = x;
    for (std::size_t i = 0; i < d; ++i) p[i] += (mask >> i & 1) ? eps : -eps;
    best = std::max(best, loss(spec, m, p, y));
  }
  return best;
}

}  // namespace

TEST_CASE("closed-form perturbation") {
  LinearModel m({2.0, -0.5, 0.0});
  CHECK(closed_form_perturbation(m, 1, {0.1}) == Vector{-0.1, 0.1, 0.0});
  CHECK(closed_form_perturbation(m, -1, {0.1}) == Vector{0.1, -0.1, 0.0});
  CHECK(closed_form_perturbation(LinearModel(Vector(4, 0.0)), 1, {0.3}) == Vector(4, 0.0));
  CHECK_THROWS_AS(closed_form_perturbation(m, 1, {-0.1}), ConfigError);
  CHECK_THROWS_AS(PerturbationBudget{NAN}.validate(), ConfigError);
}

TEST_CASE("closed form attains the brute-force corner maximum") {
  Rng rng(17);
  for (const auto& spec : kLosses) {
    CAPTURE(spec.name());
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t d = 1 + rng.index(10);
      LinearModel m(random_vec(rng, d));
      if (trial % 3 == 0) m.bias = rng.normal();
      const Vector x = random_vec(rng, d);
      const int y = rng.bernoulli(0.5) ? 1 : -1;
      const double eps = rng.uniform(0.0, 0.5);
      const double brute = corner_max(spec, m, x, y, eps);
      const double closed = adversarial_loss(spec, m, x, y, {eps});
      CHECK(std::abs(brute - closed) <= 1e-12 * std::max(1.0, std::abs(brute)));
      Vector xp = x;
      const Vector delta = closed_form_perturbation(m, y, {eps});
      for (std::size_t i = 0; i < d; ++i) xp[i] += delta[i];
      CHECK(std::abs(loss(spec, m, xp, y) - closed) <= 1e-12 * std::max(1.0, std::abs(closed)));
    }
  }
}

TEST_CASE("eps = 0 reduces to the natural loss and gradient") {
  Rng rng(5);
  for (const auto& spec : kLosses) {
    LinearModel m(random_vec(rng, 6));
    const Vector x = random_vec(rng, 6);
    for (int y : {-1, 1}) {
      CHECK(adversarial_loss(spec, m, x, y, {0.0}) == loss(spec, m, x, y));
      CHECK(adversarial_loss_gradient(spec, m, x, y, {0.0}) == loss_gradient(spec, m, x, y));
    }
  }
}

TEST_CASE("adversarial gradient matches central differences away from w_i = 0") {
  Rng rng(23);
  for (const auto& spec : kLosses) {
    for (int trial = 0; trial < 30; ++trial) {
      LinearModel m(random_vec(rng, 4));
      const Vector x = random_vec(rng, 4);
      const int y = trial % 2 ? 1 : -1;
      const double eps = 0.2;
      const double z = eps * l1_norm(m.w) - y * m.logit(x);
      if (spec.kind == LossKind::hinge && std::abs(z + 1.0) < 1e-3) continue;
      bool near_zero = false;
      for (double w : m.w) near_zero |= std::abs(w) < 1e-3;
      if (near_zero) continue;
      const Vector g = adversarial_loss_gradient(spec, m, x, y, {eps});
      for (std::size_t i = 0; i < 4; ++i) {
        LinearModel p = m, q = m;
        p.w[i] += 1e-7;
        q.w[i] -= 1e-7;
        const double fd =
            (adversarial_loss(spec, p, x, y, {eps}) - adversarial_loss(spec, q, x, y, {eps})) / 2e-7;
        CHECK(testutil::rel_err(g[i], fd) <= 1e-6);
      }
    }
  }
}

TEST_CASE("PGD stays in the box and never ends below its start") {
  const LossSpec spec = LossSpec::logistic();
  MlpModel m = MlpModel::init({6, 8, 1}, HiddenActivation::tanh, 2);
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const Vector x = random_vec(rng, 6);
    const int y = trial % 2 ? 1 : -1;
    const double eps = 0.05 * (1 + trial % 4);
    PgdConfig cfg = PgdConfig::defaults_for(eps);
    cfg.seed = static_cast<std::uint64_t>(trial);
    const Vector delta = pgd_perturbation(spec, m, x, y, {eps}, cfg);
    CHECK(linf_norm(delta) <= eps);
    // Reconstruct the start point from the same seed.
    Rng start(cfg.seed);
    Vector x0 = x, xa = x;
    for (std::size_t i = 0; i < 6; ++i) {
      x0[i] += start.uniform(-eps, eps);
      xa[i] += delta[i];
    }
    CHECK(spec.g(-y * m.logit(xa)) >= spec.g(-y * m.logit(x0)));
    CHECK(pgd_perturbation(spec, m, x, y, {eps}, cfg) == delta);
  }
  CHECK(PgdConfig::defaults_for(0.1).steps == 20);
  CHECK(PgdConfig::defaults_for(0.0).steps == 10);
}

TEST_CASE("PGD on a linear network reaches the closed-form value") {
  const LossSpec spec = LossSpec::logistic();
  MlpModel m = MlpModel::init({5, 1}, HiddenActivation::softplus, 4);
  const Vector p = m.flatten();
  LinearModel lin({p[0], p[1], p[2], p[3], p[4]}, Activation::sigmoid, p[5]);
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = random_vec(rng, 5);
    const int y = trial % 2 ? 1 : -1;
    PgdConfig cfg = PgdConfig::defaults_for(0.1);
    cfg.seed = static_cast<std::uint64_t>(trial);
    const Vector delta = pgd_perturbation(spec, m, x, y, {0.1}, cfg);
    Vector xa = x;
    for (std::size_t i = 0; i < 5; ++i) xa[i] += delta[i];
    CHECK(spec.g(-y * m.logit(xa)) ==
          doctest::Approx(adversarial_loss(spec, lin, x, y, {0.1})).epsilon(1e-9));
  }
}

TEST_CASE("PGD with unit clamping keeps pixels in [0, 1]") {
  MlpModel m = MlpModel::init({4, 3, 1}, HiddenActivation::relu, 6);
  const Vector x{0.0, 1.0, 0.02, 0.5};
  PgdConfig cfg = PgdConfig::defaults_for(0.1);
  cfg.clamp_unit = true;
  for (int y : {-1, 1}) {
    const Vector delta = pgd_perturbation(LossSpec::logistic(), m, x, y, {0.1}, cfg);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(x[i] + delta[i] >= 0.0);
      CHECK(x[i] + delta[i] <= 1.0);
    }
  }
  PgdConfig bad;
  bad.steps = 0;
  CHECK_THROWS_AS(pgd_perturbation(LossSpec::logistic(), m, x, 1, {0.1}, bad), ConfigError);
}

TEST_CASE("one-vs-all perturbs each head with its own label") {
  OneVsAllModel m;
  m.heads = {LinearModel({1.0, -1.0}), LinearModel({-2.0, 0.0}), LinearModel({0.5, 0.5})};
  const auto deltas = one_vs_all_perturbation(m, 1, {0.2});
  REQUIRE(deltas.size() == 3);
  CHECK(deltas[0] == Vector{0.2, -0.2});  // y = -1 for head 0
  CHECK(deltas[1] == Vector{0.2, 0.0});   // y = +1 for head 1
  CHECK(deltas[2] == Vector{0.2, 0.2});   // y = -1 for head 2
  CHECK_THROWS_AS(one_vs_all_perturbation(m, 3, {0.2}), ConfigError);
}
