#include "attrsparse/optimizer.hpp"

#include <cmath>

namespace attrsparse {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer '" + name + "' (valid: adam, sgd)");
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, std::size_t n_params)
    : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be > 0");
  if (kind == OptimizerKind::adam) {
    m_.assign(n_params, 0.0);
    v_.assign(n_params, 0.0);
  }
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
  require_same_dim(params.size(), grad.size(), "optimizer step");
  ++t_;
  if (kind_ == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
    return;
  }
  require_same_dim(params.size(), m_.size(), "optimizer state");
  const double t = static_cast<double>(t_);
  const double bc1 = 1.0 - std::pow(beta1, t);
  bc2_ = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2_;
    params[i] -= lr_ * mhat / (std::sqrt(vhat) + adam_eps);
  }
}

double Optimizer::l1_threshold(std::size_t i, double lambda) const {
  if (kind_ == OptimizerKind::sgd || t_ == 0) return lr_ * lambda;
  return lr_ * lambda / (std::sqrt(v_[i] / bc2_) + adam_eps);
}

}  // namespace attrsparse
