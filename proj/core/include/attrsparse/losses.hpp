#pragma once

#include <string>
#include <string_view>

namespace attrsparse {

enum class LossKind { logistic, hinge, softplus_hinge };

/// Scalar loss g applied to the negated margin z = -y<w,x>.
/// All three kinds are non-decreasing and convex.
struct LossSpec {
  LossKind kind = LossKind::logistic;

  double g(double z) const;
  /// Derivative; for hinge the subgradient 1{z > -1} (0 at the kink).
  double gprime(double z) const;

  std::string name() const;
  static LossSpec parse(std::string_view name);
  static LossSpec logistic() { return {LossKind::logistic}; }
};

/// Numerically stable ln(1 + e^z).
double softplus(double z);
/// Numerically stable 1 / (1 + e^-z).
double sigmoid(double z);

}  // namespace attrsparse
