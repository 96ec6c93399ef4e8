#include "attrsparse/training.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "attrsparse/gini.hpp"
#include "attrsparse/io.hpp"
#include "attrsparse/parallel.hpp"
#include "attrsparse/rng.hpp"

namespace attrsparse {

using nlohmann::json;

namespace {

constexpr double kDivergenceLimit = 1e6;

void guard(double batch_loss, std::size_t step) {
  if (!std::isfinite(batch_loss) || batch_loss > kDivergenceLimit)
    throw DivergenceError("training diverged: batch loss " + format_double(batch_loss) +
                              " at step " + std::to_string(step),
                          step);
}

void require_binary(const Dataset& ds) {
  if (ds.label_kind != LabelKind::binary)
    throw DataError("training needs binary labels (use the one-vs-all trainer)");
  if (ds.train_rows.empty()) throw DataError("training split is empty");
}

// Which perturbation a linear regime applies to each batch example.
enum class LinearPerturb { none, adversarial, stable_ig };

TrainResult<LinearModel> train_linear(const Dataset& ds, const LossSpec& spec,
                                      const TrainConfig& cfg, LinearPerturb perturb) {
  cfg.validate();
  require_binary(ds);
  const std::size_t d = ds.dim();
  TrainResult<LinearModel> out;
  LinearModel& model = out.model;
  model.w.assign(d, 0.0);
  if (cfg.fit_bias) model.bias = 0.0;

  Optimizer opt(cfg.optimizer, cfg.learning_rate, d + 1);
  Vector params(d + 1, 0.0), grad(d + 1), xa(d);
  std::vector<std::size_t> order = ds.train_rows;
  Rng rng(mix_seed(cfg.seed, 1));
  const double eps = cfg.epsilon;
  const bool l1 = cfg.regime == Regime::l1 && cfg.lambda > 0.0;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t r = order[k];
        const auto x = ds.x(r);
        const int y = ds.y(r);
        std::span<const double> point = x;
        if (perturb != LinearPerturb::none && eps > 0.0) {
          const Vector delta = perturb == LinearPerturb::adversarial
                                   ? closed_form_perturbation(model, y, {eps})
                                   : stable_ig_maximizer(model, y, eps);
          for (std::size_t i = 0; i < d; ++i) xa[i] = x[i] + delta[i];
          point = xa;
        }
        batch_loss += loss(spec, model, point, y);
        const Vector g = loss_gradient(spec, model, point, y);
        for (std::size_t i = 0; i < d; ++i) grad[i] += g[i];
        if (cfg.fit_bias) grad[d] += loss_gradient_bias(spec, model, point, y);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : grad) g *= inv;
      batch_loss *= inv;
      guard(batch_loss, step);

      std::copy(model.w.begin(), model.w.end(), params.begin());
      params[d] = model.bias_or_zero();
      opt.step(params, grad);
      if (l1)
        for (std::size_t i = 0; i < d; ++i)
          params[i] = soft_threshold(params[i], opt.l1_threshold(i, cfg.lambda));
      std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d), model.w.begin());
      if (cfg.fit_bias) model.bias = params[d];
      if (!all_finite(model.w)) guard(std::nan(""), step);

      loss_sum += batch_loss;
      ++batches;
      ++step;
    }
    EpochStats s;
    s.epoch = epoch + 1;
    s.l1_norm = l1_norm(model.w);
    s.loss = loss_sum / static_cast<double>(batches) + (l1 ? cfg.lambda * s.l1_norm : 0.0);
    s.accuracy = evaluate(model, ds, Split::train, spec).accuracy;
    s.weight_gini = gini_abs(model.w).value;
    out.trace.epochs.push_back(s);
  }
  return out;
}

}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::natural: return "natural";
    case Regime::adversarial: return "adversarial";
    case Regime::l1: return "l1";
    case Regime::stable_ig: return "stable-ig";
  }
  return "?";
}

Regime parse_regime(const std::string& name) {
  if (name == "natural") return Regime::natural;
  if (name == "adversarial") return Regime::adversarial;
  if (name == "l1") return Regime::l1;
  if (name == "stable-ig") return Regime::stable_ig;
  throw ConfigError("unknown regime '" + name +
                    "' (valid regimes: natural, adversarial, l1, stable-ig)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be > 0");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(pgd_step_size > 0.0)) throw ConfigError("pgd_step_size must be > 0");
}

TrainConfig train_config_from_json(const std::string& text, TrainConfig cfg) {
  static const std::set<std::string> known{
      "regime", "epsilon", "lambda", "learning_rate", "batch_size", "epochs", "seed",
      "optimizer", "fit_bias", "pgd_steps", "pgd_step_size", "clamp_unit"};
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    for (const auto& [key, _] : j.items())
      if (!known.contains(key)) throw ConfigError("config: unknown key '" + key + "'");
    if (j.contains("regime")) cfg.regime = parse_regime(j["regime"].get<std::string>());
    if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
    if (j.contains("lambda")) cfg.lambda = j["lambda"].get<double>();
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("optimizer")) cfg.optimizer = parse_optimizer(j["optimizer"].get<std::string>());
    if (j.contains("fit_bias")) cfg.fit_bias = j["fit_bias"].get<bool>();
    if (j.contains("pgd_steps")) cfg.pgd_steps = j["pgd_steps"].get<std::size_t>();
    if (j.contains("pgd_step_size")) cfg.pgd_step_size = j["pgd_step_size"].get<double>();
    if (j.contains("clamp_unit")) cfg.clamp_unit = j["clamp_unit"].get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string train_config_to_json(const TrainConfig& cfg) {
  const json j{{"regime", to_string(cfg.regime)},
               {"epsilon", cfg.epsilon},
               {"lambda", cfg.lambda},
               {"learning_rate", cfg.learning_rate},
               {"batch_size", cfg.batch_size},
               {"epochs", cfg.epochs},
               {"seed", cfg.seed},
               {"optimizer", to_string(cfg.optimizer)},
               {"fit_bias", cfg.fit_bias},
               {"pgd_steps", cfg.pgd_steps},
               {"pgd_step_size", cfg.pgd_step_size},
               {"clamp_unit", cfg.clamp_unit}};
  return j.dump(2);
}

std::string trace_csv(const TrainTrace& trace) {
  std::string out = "epoch,loss,acc,l1_norm,weight_gini\n";
  for (const auto& e : trace.epochs)
    out += std::to_string(e.epoch) + "," + format_double(e.loss) + "," + format_double(e.accuracy) +
           "," + format_double(e.l1_norm) + "," + format_double(e.weight_gini) + "\n";
  return out;
}

TrainResult<LinearModel> train(const Dataset& ds, const LossSpec& spec, const TrainConfig& cfg) {
  switch (cfg.regime) {
    case Regime::adversarial: return train_linear(ds, spec, cfg, LinearPerturb::adversarial);
    case Regime::stable_ig: return train_stable_ig(ds, spec, cfg);
    default: return train_linear(ds, spec, cfg, LinearPerturb::none);
  }
}

Vector stable_ig_maximizer(const LinearModel& model, int y, double epsilon) {
  Vector delta(model.dim());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = -y * sign(model.w[i]) * epsilon;
  return delta;
}

TrainResult<LinearModel> train_stable_ig(const Dataset& ds, const LossSpec& spec,
                                         const TrainConfig& cfg) {
  if (cfg.regime != Regime::stable_ig && !(cfg.regime == Regime::natural && cfg.epsilon == 0.0))
    throw ConfigError("train_stable_ig needs regime stable-ig");
  // The loss plus the regularizer at its maximizer equals the loss at the
  // shifted point x + Delta, so the step is taken there.
  return train_linear(ds, spec, cfg, LinearPerturb::stable_ig);
}

TrainResult<MlpModel> train_mlp(const Dataset& ds, const LossSpec& spec, const TrainConfig& cfg,
                                const MlpModel& init) {
  cfg.validate();
  require_binary(ds);
  init.validate();
  require_same_dim(init.input_dim(), ds.dim(), "mlp input");
  if (cfg.regime == Regime::stable_ig) throw ConfigError("stable-ig training needs a linear model");
  const std::size_t d = ds.dim();

  TrainResult<MlpModel> out{init, {}};
  MlpModel& model = out.model;
  Vector params = model.flatten();
  const std::size_t np = params.size();

  // Weight positions (biases are not regularized).
  std::vector<char> is_weight(np, 0);
  {
    std::size_t k = 0;
    for (const auto& l : model.layers) {
      for (std::size_t i = 0; i < l.out() * l.in(); ++i) is_weight[k++] = 1;
      k += l.out();
    }
  }
  auto weights_of = [&](const Vector& p) {
    Vector w;
    for (std::size_t i = 0; i < np; ++i)
      if (is_weight[i]) w.push_back(p[i]);
    return w;
  };

  Optimizer opt(cfg.optimizer, cfg.learning_rate, np);
  std::vector<std::size_t> order = ds.train_rows;
  Rng rng(mix_seed(cfg.seed, 1));
  const bool adversarial = cfg.regime == Regime::adversarial && cfg.epsilon > 0.0;
  const bool l1 = cfg.regime == Regime::l1 && cfg.lambda > 0.0;
  PgdConfig pgd = PgdConfig::defaults_for(cfg.epsilon);
  if (cfg.pgd_steps > 0) pgd.steps = cfg.pgd_steps;
  pgd.step_size = cfg.pgd_step_size;
  pgd.clamp_unit = cfg.clamp_unit;

  std::vector<MlpGradient> slots(cfg.batch_size);
  Vector grad(np);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(order.size(), start + cfg.batch_size) - start;
      parallel_for(count, [&](std::size_t k) {
        const std::size_t r = order[start + k];
        const auto x = ds.x(r);
        const int y = ds.y(r);
        if (!adversarial) {
          slots[k] = mlp_loss_gradient(spec, model, x, y);
          return;
        }
        PgdConfig c = pgd;
        c.seed = mix_seed(cfg.seed, 0x100000 + step * cfg.batch_size + k);
        const Vector delta = pgd_perturbation(spec, model, x, y, {cfg.epsilon}, c);
        Vector xa(d);
        for (std::size_t i = 0; i < d; ++i) xa[i] = x[i] + delta[i];
        slots[k] = mlp_loss_gradient(spec, model, xa, y);
      });
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = 0; k < count; ++k) {
        batch_loss += slots[k].loss;
        for (std::size_t i = 0; i < np; ++i) grad[i] += slots[k].params[i];
      }
      const double inv = 1.0 / static_cast<double>(count);
      for (double& g : grad) g *= inv;
      batch_loss *= inv;
      guard(batch_loss, step);

      opt.step(params, grad);
      if (l1)
        for (std::size_t i = 0; i < np; ++i)
          if (is_weight[i]) params[i] = soft_threshold(params[i], opt.l1_threshold(i, cfg.lambda));
      if (!all_finite(params)) guard(std::nan(""), step);
      model.assign(params);
      loss_sum += batch_loss;
      ++batches;
      ++step;
    }
    const Vector w = weights_of(params);
    EpochStats s;
    s.epoch = epoch + 1;
    s.l1_norm = l1_norm(w);
    s.loss = loss_sum / static_cast<double>(batches) + (l1 ? cfg.lambda * s.l1_norm : 0.0);
    s.accuracy = evaluate(model, ds, Split::train, spec).accuracy;
    s.weight_gini = gini_abs(w).value;
    out.trace.epochs.push_back(s);
  }
  return out;
}

TrainResult<OneVsAllModel> train_one_vs_all(const Dataset& ds, const LossSpec& spec,
                                            const TrainConfig& cfg) {
  if (ds.label_kind != LabelKind::multiclass || ds.num_classes() < 3)
    throw DataError("one-vs-all training needs a multi-class dataset with >= 3 classes");
  TrainResult<OneVsAllModel> out;
  for (std::size_t k = 0; k < ds.num_classes(); ++k) {
    Dataset head = ds;
    head.label_kind = LabelKind::binary;
    head.class_names = {"not " + ds.class_names[k], ds.class_names[k]};
    for (std::size_t r = 0; r < ds.size(); ++r)
      head.labels[r] = head_label(k, static_cast<std::size_t>(ds.labels[r]));
    TrainConfig c = cfg;
    c.seed = mix_seed(cfg.seed, k);
    auto res = train(head, spec, c);
    out.model.heads.push_back(std::move(res.model));
    // The trace follows the first head; per-head traces are available by
    // training heads directly.
    if (k == 0) out.trace = std::move(res.trace);
  }
  const Evaluation e = evaluate(out.model, ds, Split::train, spec);
  for (auto& s : out.trace.epochs) s.accuracy = e.accuracy;
  return out;
}

Evaluation evaluate(const LinearModel& model, const Dataset& ds, Split split,
                    const LossSpec& spec) {
  const auto& rows = ds.rows(split);
  if (rows.empty()) throw DataError("evaluate: split is empty");
  require_same_dim(model.dim(), ds.dim(), "evaluate");
  std::size_t correct = 0;
  double loss_sum = 0.0;
  const double threshold = model.activation == Activation::sigmoid ? 0.5 : 0.0;
  for (std::size_t r : rows) {
    const auto x = ds.x(r);
    const int pred = model.predict(x) >= threshold ? 1 : -1;
    correct += pred == ds.y(r);
    loss_sum += loss(spec, model, x, ds.y(r));
  }
  const double n = static_cast<double>(rows.size());
  return {static_cast<double>(correct) / n, loss_sum / n};
}

Evaluation evaluate(const MlpModel& model, const Dataset& ds, Split split, const LossSpec& spec) {
  const auto& rows = ds.rows(split);
  if (rows.empty()) throw DataError("evaluate: split is empty");
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (std::size_t r : rows) {
    const double z = model.logit(ds.x(r));
    const int pred = sigmoid(z) >= 0.5 ? 1 : -1;
    correct += pred == ds.y(r);
    loss_sum += spec.g(-ds.y(r) * z);
  }
  const double n = static_cast<double>(rows.size());
  return {static_cast<double>(correct) / n, loss_sum / n};
}

Evaluation evaluate(const OneVsAllModel& model, const Dataset& ds, Split split,
                    const LossSpec& spec) {
  const auto& rows = ds.rows(split);
  if (rows.empty()) throw DataError("evaluate: split is empty");
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (std::size_t r : rows) {
    const auto x = ds.x(r);
    const auto cls = static_cast<std::size_t>(ds.y(r));
    correct += model.predict(x) == cls;
    for (std::size_t k = 0; k < model.num_classes(); ++k)
      loss_sum += loss(spec, model.heads[k], x, head_label(k, cls));
  }
  const double n = static_cast<double>(rows.size());
  return {static_cast<double>(correct) / n,
          loss_sum / (n * static_cast<double>(model.num_classes()))};
}

}  // namespace attrsparse
