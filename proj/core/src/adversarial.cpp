#include "attrsparse/adversarial.hpp"

#include <algorithm>
#include <cmath>

#include "attrsparse/rng.hpp"

namespace attrsparse {

void PerturbationBudget::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw ConfigError("epsilon must be finite and >= 0");
}

PgdConfig PgdConfig::defaults_for(double epsilon) {
  PgdConfig cfg;
  cfg.steps = static_cast<std::size_t>(std::floor(epsilon * 100.0)) + 10;
  return cfg;
}

void PgdConfig::validate() const {
  if (steps < 1) throw ConfigError("pgd steps must be >= 1");
  if (!(step_size > 0.0)) throw ConfigError("pgd step_size must be > 0");
}

Vector closed_form_perturbation(const LinearModel& model, int y, PerturbationBudget budget) {
  budget.validate();
  Vector delta(model.dim());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = -y * sign(model.w[i]) * budget.epsilon;
  return delta;
}

double adversarial_loss(const LossSpec& spec, const LinearModel& model,
                        std::span<const double> x, int y, PerturbationBudget budget) {
  budget.validate();
  return spec.g(budget.epsilon * l1_norm(model.w) - y * model.logit(x));
}

Vector adversarial_loss_gradient(const LossSpec& spec, const LinearModel& model,
                                 std::span<const double> x, int y, PerturbationBudget budget) {
  budget.validate();
  const double gp = spec.gprime(budget.epsilon * l1_norm(model.w) - y * model.logit(x));
  Vector grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    grad[i] = -gp * (y * x[i] - sign(model.w[i]) * budget.epsilon);
  return grad;
}

Vector pgd_perturbation(const LossSpec& spec, const MlpModel& model, std::span<const double> x,
                        int y, PerturbationBudget budget, const PgdConfig& cfg) {
  budget.validate();
  cfg.validate();
  require_same_dim(x.size(), model.input_dim(), "pgd input");
  const double eps = budget.epsilon;
  const std::size_t d = x.size();

  auto project = [&](Vector& delta) {
    for (std::size_t i = 0; i < d; ++i) {
      delta[i] = std::clamp(delta[i], -eps, eps);
      if (cfg.clamp_unit) delta[i] = std::clamp(x[i] + delta[i], 0.0, 1.0) - x[i];
    }
  };

  Vector delta(d, 0.0);
  if (cfg.random_start) {
    Rng rng(cfg.seed);
    for (double& v : delta) v = rng.uniform(-eps, eps);
  }
  project(delta);

  Vector point(d);
  auto eval = [&](const Vector& dl) {
    for (std::size_t i = 0; i < d; ++i) point[i] = x[i] + dl[i];
    return mlp_loss_gradient(spec, model, point, y);
  };

  auto g = eval(delta);
  Vector best = delta;
  double best_loss = g.loss;
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    for (std::size_t i = 0; i < d; ++i) delta[i] += cfg.step_size * sign(g.input[i]);
    project(delta);
    g = eval(delta);
    if (g.loss > best_loss) {
      best_loss = g.loss;
      best = delta;
    }
  }
  return best;
}

std::vector<Vector> one_vs_all_perturbation(const OneVsAllModel& model, std::size_t cls,
                                            PerturbationBudget budget) {
  if (cls >= model.num_classes()) throw ConfigError("class index out of range");
  std::vector<Vector> out;
  out.reserve(model.num_classes());
  for (std::size_t k = 0; k < model.num_classes(); ++k)
    out.push_back(closed_form_perturbation(model.heads[k], head_label(k, cls), budget));
  return out;
}

}  // namespace attrsparse
