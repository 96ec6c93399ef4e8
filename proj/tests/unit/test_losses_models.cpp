#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "attrsparse/model_io.hpp"
#include "attrsparse/models.hpp"
#include "attrsparse/optimizer.hpp"
#include "attrsparse/rng.hpp"
#include "test_util.hpp"

using namespace attrsparse;

namespace {

const LossSpec kLosses[] = {{LossKind::logistic}, {LossKind::hinge}, {LossKind::softplus_hinge}};

Vector random_vec(Rng& rng, std::size_t d, double scale = 1.0) {
  Vector v(d);
  for (auto& x : v) x = rng.normal(0.0, scale);
  return v;
}

}  // namespace

TEST_CASE("loss values at known points") {
  const LossSpec lg{LossKind::logistic}, hg{LossKind::hinge}, sh{LossKind::softplus_hinge};
  CHECK(lg.g(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(lg.gprime(0.0) == 0.5);
  CHECK(hg.g(-1.0) == 0.0);
  CHECK(hg.g(0.0) == 1.0);
  CHECK(hg.g(-3.0) == 0.0);
  CHECK(hg.gprime(-1.0) == 0.0);  // subgradient choice at the kink
  CHECK(hg.gprime(-0.999) == 1.0);
  CHECK(sh.g(-1.0) == doctest::Approx(std::log(2.0)));
  CHECK(sh.g(0.5) == doctest::Approx(std::log1p(std::exp(1.5))));
}

TEST_CASE("losses are non-decreasing and convex; g' matches finite differences") {
  for (const auto& spec : kLosses) {
    CAPTURE(spec.name());
    double prev = -1.0;
    for (double z = -8.0; z <= 8.0; z += 0.125) {
      const double gz = spec.g(z);
      CHECK(gz >= prev);
      prev = gz;
      // Midpoint convexity.
      const double h = 0.3;
      CHECK(spec.g(z) <= 0.5 * (spec.g(z - h) + spec.g(z + h)) + 1e-15);
      if (spec.kind == LossKind::hinge && std::abs(z + 1.0) < 1e-3) continue;
      const double e = 1e-6;
      const double fd = (spec.g(z + e) - spec.g(z - e)) / (2 * e);
      CHECK(spec.gprime(z) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("softplus and sigmoid stay finite at extreme arguments") {
  CHECK(softplus(1000.0) == 1000.0);
  CHECK(softplus(-1000.0) == 0.0);
  CHECK(sigmoid(-1000.0) == 0.0);
  CHECK(sigmoid(1000.0) == 1.0);
  CHECK(softplus(-40.0) == doctest::Approx(std::exp(-40.0)).epsilon(1e-12));
}

TEST_CASE("loss parse") {
  CHECK(LossSpec::parse("softplus-hinge").kind == LossKind::softplus_hinge);
  CHECK(LossSpec::parse("hinge").name() == "hinge");
  CHECK_THROWS_WITH_AS(LossSpec::parse("square"), doctest::Contains("logistic, hinge"), ConfigError);
}

TEST_CASE("linear loss gradient matches central differences") {
  Rng rng(11);
  for (const auto& spec : kLosses) {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t d = 5;
      LinearModel m(random_vec(rng, d), Activation::sigmoid, rng.normal());
      const Vector x = random_vec(rng, d);
      const int y = rng.bernoulli(0.5) ? 1 : -1;
      if (spec.kind == LossKind::hinge && std::abs(-y * m.logit(x) + 1.0) < 1e-3) continue;
      const Vector g = loss_gradient(spec, m, x, y);
      for (std::size_t i = 0; i < d; ++i) {
        const double e = 1e-6;
        LinearModel p = m, q = m;
        p.w[i] += e;
        q.w[i] -= e;
        const double fd = (loss(spec, p, x, y) - loss(spec, q, x, y)) / (2 * e);
        CHECK(testutil::rel_err(g[i], fd) <= 1e-6);
      }
      LinearModel p = m, q = m;
      *p.bias += 1e-6;
      *q.bias -= 1e-6;
      const double fd = (loss(spec, p, x, y) - loss(spec, q, x, y)) / 2e-6;
      CHECK(testutil::rel_err(loss_gradient_bias(spec, m, x, y), fd) <= 1e-6);
    }
  }
}

TEST_CASE("linear model basics") {
  LinearModel m({1.0, -2.0});
  CHECK(m.logit(std::vector{3.0, 1.0}) == 1.0);
  CHECK(m.predict(std::vector{0.0, 0.0}) == 0.5);
  LinearModel id({1.0, -2.0}, Activation::identity, 0.5);
  CHECK(id.predict(std::vector{3.0, 1.0}) == 1.5);
  CHECK_THROWS_AS(m.logit(std::vector{1.0}), DimensionError);
  CHECK_THROWS_AS(LinearModel({1.0, NAN}).validate(), DataError);
  CHECK_THROWS_AS(LinearModel().validate(), DimensionError);
}

TEST_CASE("MLP matches the reference fixture") {
  const auto text = read_text_file(std::filesystem::path(ATTRSPARSE_FIXTURE_DIR) /
                                   "mlp_softplus_3_2_1.json");
  const auto j = nlohmann::json::parse(text);
  MlpModel m = MlpModel::init(j["sizes"].get<std::vector<std::size_t>>(),
                              parse_hidden_activation(j["hidden"]), 0);
  const auto params = j["params"].get<Vector>();
  m.assign(params);
  CHECK(m.flatten() == params);
  for (const auto& c : j["cases"]) {
    const auto x = c["x"].get<Vector>();
    const int y = c["y"];
    CHECK(m.logit(x) == doctest::Approx(c["logit"].get<double>()).epsilon(1e-14));
    const MlpGradient g = mlp_loss_gradient(LossSpec::logistic(), m, x, y);
    CHECK(g.loss == doctest::Approx(c["loss"].get<double>()).epsilon(1e-14));
    const auto gp = c["grad_params"].get<Vector>();
    const auto gx = c["grad_input"].get<Vector>();
    REQUIRE(g.params.size() == gp.size());
    for (std::size_t i = 0; i < gp.size(); ++i) CHECK(std::abs(g.params[i] - gp[i]) <= 1e-14);
    for (std::size_t i = 0; i < gx.size(); ++i) CHECK(std::abs(g.input[i] - gx[i]) <= 1e-14);
  }
}

TEST_CASE("MLP gradients match central differences for every activation") {
  for (auto act : {HiddenActivation::softplus, HiddenActivation::tanh, HiddenActivation::relu}) {
    CAPTURE(to_string(act));
    MlpModel m = MlpModel::init({4, 6, 3, 1}, act, 7);
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
      const Vector x = random_vec(rng, 4);
      const int y = trial % 2 ? 1 : -1;
      for (const auto& spec : {LossSpec{LossKind::logistic}, LossSpec{LossKind::softplus_hinge}}) {
        const MlpGradient g = mlp_loss_gradient(spec, m, x, y);
        Vector p = m.flatten();
        for (std::size_t i = 0; i < p.size(); ++i) {
          const double e = 1e-6, keep = p[i];
          MlpModel a = m, b = m;
          p[i] = keep + e;
          a.assign(p);
          p[i] = keep - e;
          b.assign(p);
          p[i] = keep;
          const double fd = (spec.g(-y * a.logit(x)) - spec.g(-y * b.logit(x))) / (2 * e);
          CHECK(std::abs(g.params[i] - fd) <= 1e-6);
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
          Vector xp = x, xm = x;
          xp[i] += 1e-6;
          xm[i] -= 1e-6;
          const double fd = (spec.g(-y * m.logit(xp)) - spec.g(-y * m.logit(xm))) / 2e-6;
          CHECK(std::abs(g.input[i] - fd) <= 1e-6);
        }
      }
      double logit = 0.0;
      const Vector gi = mlp_logit_input_gradient(m, x, &logit);
      CHECK(logit == m.logit(x));
      const MlpGradient gl = mlp_loss_gradient(LossSpec::logistic(), m, x, 1);
      const double c = -LossSpec::logistic().gprime(-logit);
      for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(gl.input[i] == doctest::Approx(c * gi[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("MLP without hidden layers is a linear model with bias") {
  MlpModel m = MlpModel::init({3, 1}, HiddenActivation::softplus, 5);
  CHECK(m.parameter_count() == 4);
  const Vector p = m.flatten();
  LinearModel lin({p[0], p[1], p[2]}, Activation::sigmoid, p[3]);
  const Vector x{0.2, -0.4, 1.3};
  CHECK(m.predict(x) == doctest::Approx(lin.predict(x)).epsilon(1e-15));
  // Init range U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  MlpModel big = MlpModel::init({16, 32, 1}, HiddenActivation::tanh, 1);
  for (double w : big.layers[0].weight.data()) CHECK(std::abs(w) <= 0.25);
  CHECK(MlpModel::init({16, 32, 1}, HiddenActivation::tanh, 1) == big);
  CHECK_THROWS_AS(m.assign(Vector(3)), DimensionError);
}

TEST_CASE("one-vs-all prediction") {
  OneVsAllModel m;
  m.heads = {LinearModel({1.0, 0.0}), LinearModel({0.0, 1.0}), LinearModel({1.0, 1.0})};
  CHECK(m.predict(std::vector{2.0, 0.0}) == 0);  // tie between heads 0 and 2
  CHECK(m.predict(std::vector{-1.0, 3.0}) == 1);
  CHECK(m.predict(std::vector{1.0, 1.0}) == 2);
  CHECK(head_label(1, 1) == 1);
  CHECK(head_label(0, 1) == -1);
  OneVsAllModel two;
  two.heads = {LinearModel({1.0}), LinearModel({1.0})};
  CHECK_THROWS(two.validate());
}

TEST_CASE("model serialization is bit-exact") {
  Rng rng(8);
  LinearModel lin(random_vec(rng, 7), Activation::sigmoid, std::nullopt);
  lin.w[0] = 0.1;
  lin.w[1] = 1.0 / 3.0;
  LinearModel withb(random_vec(rng, 3), Activation::identity, -2.0 / 7.0);
  MlpModel mlp = MlpModel::init({5, 4, 1}, HiddenActivation::relu, 9);
  OneVsAllModel ova;
  ova.heads = {LinearModel(random_vec(rng, 2)), LinearModel(random_vec(rng, 2)),
               LinearModel(random_vec(rng, 2))};
  const auto dir = testutil::scratch("modelio");
  for (const AnyModel& m : {AnyModel(lin), AnyModel(withb), AnyModel(mlp), AnyModel(ova)}) {
    CHECK(model_from_json(model_to_json(m)) == m);
    save_model(m, dir / "m.json");
    CHECK(load_model(dir / "m.json") == m);
  }
  CHECK_THROWS_AS(model_from_json("{\"format\": \"x\"}"), DataError);
  CHECK_THROWS_AS(model_from_json("not json"), DataError);
}

TEST_CASE("optimizers") {
  SUBCASE("sgd is params -= lr * grad") {
    Optimizer opt(OptimizerKind::sgd, 0.1, 2);
    Vector p{1.0, -1.0};
    opt.step(p, Vector{2.0, 0.5});
    CHECK(p[0] == doctest::Approx(0.8));
    CHECK(p[1] == doctest::Approx(-1.05));
    CHECK(opt.l1_threshold(0, 0.3) == doctest::Approx(0.03));
  }
  SUBCASE("adam's first step is lr * sign(grad)") {
    Optimizer opt(OptimizerKind::adam, 0.01, 3);
    Vector p{0.0, 0.0, 0.0};
    opt.step(p, Vector{4.0, -0.001, 0.0});
    CHECK(p[0] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(p[2] == 0.0);
    // Threshold in the preconditioned metric: lr * lambda / (sqrt(vhat) + eps).
    CHECK(opt.l1_threshold(0, 0.5) == doctest::Approx(0.01 * 0.5 / (4.0 + 1e-7)));
    CHECK(opt.steps_taken() == 1);
  }
  SUBCASE("adam matches a hand-rolled reference over several steps") {
    Optimizer opt(OptimizerKind::adam, 0.05, 1);
    Vector p{0.3};
    double m = 0, v = 0, ref = 0.3;
    const double grads[] = {0.5, -0.2, 0.1, 0.7, -1.3};
    for (int t = 1; t <= 5; ++t) {
      const double g = grads[t - 1];
      opt.step(p, Vector{g});
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      ref -= 0.05 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-7);
      CHECK(p[0] == doctest::Approx(ref).epsilon(1e-13));
    }
  }
  CHECK(soft_threshold(0.5, 0.2) == doctest::Approx(0.3));
  CHECK(soft_threshold(-0.5, 0.2) == doctest::Approx(-0.3));
  CHECK(soft_threshold(0.1, 0.2) == 0.0);
  CHECK_THROWS_AS(parse_optimizer("rmsprop"), ConfigError);
  CHECK_THROWS_AS(Optimizer(OptimizerKind::sgd, 0.0, 1), ConfigError);
}

TEST_CASE("rng determinism and portable distributions") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng r(1);
  double s = 0, ss = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    ss += z * z;
  }
  CHECK(std::abs(s / n) <= 3.0 / std::sqrt(n));
  // Var of z^2 is 2 for a standard normal.
  CHECK(std::abs(ss / n - 1.0) <= 3.0 * std::sqrt(2.0 / n));
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(7, 0) == mix_seed(7, 0));
}
