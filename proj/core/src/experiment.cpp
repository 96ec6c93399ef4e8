#include "attrsparse/experiment.hpp"

#include <chrono>
#include <cmath>

#include <json.hpp>

#include "attrsparse/gini.hpp"
#include "attrsparse/io.hpp"
#include "attrsparse/rng.hpp"

namespace attrsparse {

using nlohmann::json;

namespace {

std::size_t count_nonzero(const Vector& w) {
  std::size_t n = 0;
  for (double v : w) n += v != 0.0;
  return n;
}

}  // namespace

ExperimentReport run_compare(const Dataset& ds, const std::string& dataset_id,
                             const CompareConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (ds.label_kind != LabelKind::binary) throw DataError("compare needs binary labels");
  if (ds.test_rows.empty()) throw DataError("compare: test split is empty");
  const Vector u = cfg.baseline.value_or(Vector(ds.dim(), 0.0));
  require_same_dim(u.size(), ds.dim(), "baseline");

  ExperimentReport rep;
  rep.dataset_id = dataset_id;
  rep.version = version();
  rep.config = cfg;
  rep.dim = ds.dim();
  rep.train_size = ds.train_rows.size();
  rep.test_size = ds.test_rows.size();
  rep.split_seed = ds.split_seed;

  auto run = [&](Regime regime, double param, const std::string& kind) {
    TrainConfig tc = cfg.base;
    tc.regime = regime;
    tc.epsilon = regime == Regime::adversarial ? param : 0.0;
    tc.lambda = regime == Regime::l1 ? param : 0.0;
    const auto res = train(ds, cfg.loss, tc);
    const auto eval = evaluate(res.model, ds, Split::test, cfg.loss);
    const auto attribs = attribute_dataset(res.model, ds, Split::test, u, cfg.method, cfg.ig_steps);
    RegimeResult r;
    r.kind = kind;
    r.param = param;
    r.label = regime_label(kind, param);
    r.accuracy = eval.accuracy;
    r.mean_loss = eval.mean_loss;
    r.nonzero_weights = count_nonzero(res.model.w);
    ScoredReport sr{gini_report(attribs, r.label, ds.split_seed), eval.accuracy};
    r.mean_gini = sr.report.mean;
    rep.regimes.push_back(r);
    return sr;
  };

  const ScoredReport natural = run(Regime::natural, 0.0, "natural");
  std::vector<ScoredReport> others;
  for (double e : cfg.epsilons) others.push_back(run(Regime::adversarial, e, "adversarial"));
  for (double l : cfg.lambdas) others.push_back(run(Regime::l1, l, "l1"));
  rep.comparison = compare_regimes(natural, others);
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::string report_json(const ExperimentReport& r) {
  const auto& c = r.config;
  json regimes = json::array();
  for (std::size_t i = 0; i < r.regimes.size(); ++i) {
    const auto& g = r.regimes[i];
    const auto& row = r.comparison.rows.at(i);
    regimes.push_back({{"model", g.label},
                       {"kind", g.kind},
                       {"param", g.param},
                       {"accuracy", g.accuracy},
                       {"mean_loss", g.mean_loss},
                       {"mean_gini", g.mean_gini},
                       {"dG", row.dG},
                       {"acc_drop", row.acdrop},
                       {"nonzero_weights", g.nonzero_weights}});
  }
  json cfg{{"epsilons", c.epsilons},
           {"lambdas", c.lambdas},
           {"loss", c.loss.name()},
           {"ig_method", c.method == IgMethod::closed ? "closed" : "numeric"},
           {"ig_steps", c.ig_steps},
           {"baseline", c.baseline ? "custom" : "zero"},
           {"train", json::parse(train_config_to_json(c.base))}};
  json j{{"dataset", r.dataset_id},
         {"toolkit_version", r.version},
         {"seed", c.base.seed},
         {"split_seed", r.split_seed},
         {"dim", r.dim},
         {"train_size", r.train_size},
         {"test_size", r.test_size},
         {"config", cfg},
         {"regimes", regimes}};
  return j.dump(2) + "\n";
}

std::string sweep_csv(const ExperimentReport& r) {
  std::string out = "model,kind,param,accuracy,mean_gini\n";
  for (const auto& g : r.regimes)
    out += "\"" + g.label + "\"," + g.kind + "," + format_double(g.param) + "," +
           format_double(g.accuracy) + "," + format_double(g.mean_gini) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Blob-image study

BlobStudy run_blob_study(const BlobStudyConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("blob study needs at least one seed");
  BlobImageSpec spec = cfg.images;
  const std::size_t n = cfg.train_size + cfg.test_size;
  spec.train_fraction = static_cast<double>(cfg.train_size) / static_cast<double>(n);
  const Dataset ds = generate_blob_images(spec, n);
  const Vector black(ds.dim(), 0.0);
  const LossSpec loss = LossSpec::logistic();

  BlobStudy study;
  study.l1_gini.assign(cfg.lambdas.size(), 0.0);
  study.l1_accuracy.assign(cfg.lambdas.size(), 0.0);

  for (std::uint64_t seed : cfg.seeds) {
    const MlpModel init =
        MlpModel::init({ds.dim(), cfg.hidden, 1}, cfg.activation, mix_seed(seed, 0x1417));
    auto run = [&](Regime regime, double param, const std::string& kind) {
      TrainConfig tc;
      tc.regime = regime;
      tc.epsilon = regime == Regime::adversarial ? param : 0.0;
      tc.lambda = regime == Regime::l1 ? param : 0.0;
      tc.epochs = cfg.epochs;
      tc.seed = seed;
      tc.clamp_unit = true;
      const auto res = train_mlp(ds, loss, tc, init);
      const auto eval = evaluate(res.model, ds, Split::test, loss);
      const auto attribs = attribute_dataset(res.model, ds, Split::test, black, cfg.ig_steps);
      RegimeResult r;
      r.kind = kind;
      r.param = param;
      r.label = regime_label(kind, param);
      r.accuracy = eval.accuracy;
      r.mean_loss = eval.mean_loss;
      r.mean_gini = gini_report(attribs, r.label, ds.split_seed).mean;
      return r;
    };
    BlobSeedResult sr;
    sr.seed = seed;
    sr.natural = run(Regime::natural, 0.0, "natural");
    sr.adversarial = run(Regime::adversarial, cfg.epsilon, "adversarial");
    for (double l : cfg.lambdas) sr.l1.push_back(run(Regime::l1, l, "l1"));
    study.seeds.push_back(std::move(sr));
  }

  const double k = static_cast<double>(cfg.seeds.size());
  for (const auto& s : study.seeds) {
    study.natural_gini += s.natural.mean_gini / k;
    study.adversarial_gini += s.adversarial.mean_gini / k;
    study.natural_accuracy += s.natural.accuracy / k;
    study.adversarial_accuracy += s.adversarial.accuracy / k;
    for (std::size_t j = 0; j < cfg.lambdas.size(); ++j) {
      study.l1_gini[j] += s.l1[j].mean_gini / k;
      study.l1_accuracy[j] += s.l1[j].accuracy / k;
    }
  }
  for (std::size_t j = 0; j < cfg.lambdas.size(); ++j) {
    if (study.l1_accuracy[j] < study.natural_accuracy - cfg.accuracy_slack) continue;
    if (!study.best_l1_gini || study.l1_gini[j] > *study.best_l1_gini) {
      study.best_l1_gini = study.l1_gini[j];
      study.best_l1_lambda = cfg.lambdas[j];
    }
  }
  return study;
}

std::string blob_study_json(const BlobStudyConfig& cfg, const BlobStudy& s) {
  json seeds = json::array();
  for (const auto& r : s.seeds) {
    json l1 = json::array();
    for (const auto& m : r.l1)
      l1.push_back({{"lambda", m.param}, {"accuracy", m.accuracy}, {"mean_gini", m.mean_gini}});
    seeds.push_back({{"seed", r.seed},
                     {"natural", {{"accuracy", r.natural.accuracy}, {"mean_gini", r.natural.mean_gini}}},
                     {"adversarial",
                      {{"accuracy", r.adversarial.accuracy}, {"mean_gini", r.adversarial.mean_gini}}},
                     {"l1", l1}});
  }
  json sweep = json::array();
  for (std::size_t j = 0; j < cfg.lambdas.size(); ++j)
    sweep.push_back(
        {{"lambda", cfg.lambdas[j]}, {"accuracy", s.l1_accuracy[j]}, {"mean_gini", s.l1_gini[j]}});
  json j{{"task", "blob-images"},
         {"toolkit_version", version()},
         {"shape", {cfg.images.height, cfg.images.width}},
         {"hidden", cfg.hidden},
         {"epsilon", cfg.epsilon},
         {"epochs", cfg.epochs},
         {"natural", {{"accuracy", s.natural_accuracy}, {"mean_gini", s.natural_gini}}},
         {"adversarial", {{"accuracy", s.adversarial_accuracy}, {"mean_gini", s.adversarial_gini}}},
         {"l1_sweep", sweep},
         {"best_l1_within_slack",
          s.best_l1_gini ? json{{"lambda", *s.best_l1_lambda}, {"mean_gini", *s.best_l1_gini}}
                         : json(nullptr)},
         {"seeds", seeds}};
  return j.dump(2) + "\n";
}

}  // namespace attrsparse
