#include "attrsparse/losses.hpp"

#include <cmath>

#include "attrsparse/common.hpp"

namespace attrsparse {

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double LossSpec::g(double z) const {
  switch (kind) {
    case LossKind::logistic: return softplus(z);
    case LossKind::hinge: return std::max(0.0, 1.0 + z);
    case LossKind::softplus_hinge: return softplus(1.0 + z);
  }
  return 0.0;
}

double LossSpec::gprime(double z) const {
  switch (kind) {
    case LossKind::logistic: return sigmoid(z);
    case LossKind::hinge: return z > -1.0 ? 1.0 : 0.0;
    case LossKind::softplus_hinge: return sigmoid(1.0 + z);
  }
  return 0.0;
}

std::string LossSpec::name() const {
  switch (kind) {
    case LossKind::logistic: return "logistic";
    case LossKind::hinge: return "hinge";
    case LossKind::softplus_hinge: return "softplus-hinge";
  }
  return "?";
}

LossSpec LossSpec::parse(std::string_view name) {
  if (name == "logistic") return {LossKind::logistic};
  if (name == "hinge") return {LossKind::hinge};
  if (name == "softplus-hinge") return {LossKind::softplus_hinge};
  throw ConfigError("unknown loss '" + std::string(name) +
                    "' (valid: logistic, hinge, softplus-hinge)");
}

}  // namespace attrsparse
