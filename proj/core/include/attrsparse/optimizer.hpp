#pragma once

#include <span>
#include <string>

#include "attrsparse/common.hpp"

namespace attrsparse {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& name);

/// First-order optimizer over a flat parameter vector.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, std::size_t n_params);

  /// params -= update(grad).
  void step(std::span<double> params, std::span<const double> grad);

  /// Soft-threshold for coordinate i after the latest step. Under Adam the
  /// proximal step is taken in the optimizer's diagonal metric:
  /// lr * lambda / (sqrt(vhat_i) + eps). Under SGD it is lr * lambda.
  double l1_threshold(std::size_t i, double lambda) const;

  OptimizerKind kind() const noexcept { return kind_; }
  std::size_t steps_taken() const noexcept { return t_; }

  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double adam_eps = 1e-7;

 private:
  OptimizerKind kind_;
  double lr_;
  Vector m_, v_;
  std::size_t t_ = 0;
  double bc2_ = 1.0;  // 1 - beta2^t
};

/// sign(w) max(|w| - t, 0); never flips a sign.
inline double soft_threshold(double w, double t) {
  if (w > t) return w - t;
  if (w < -t) return w + t;
  return 0.0;
}

}  // namespace attrsparse
