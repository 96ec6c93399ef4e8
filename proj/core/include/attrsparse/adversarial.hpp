#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "attrsparse/losses.hpp"
#include "attrsparse/models.hpp"

namespace attrsparse {

struct PerturbationBudget {
  double epsilon = 0.0;
  void validate() const;
};

struct PgdConfig {
  std::size_t steps = 10;
  double step_size = 0.01;
  bool random_start = true;
  std::uint64_t seed = 0;
  /// Keep x + delta inside [0, 1] (image-like data).
  bool clamp_unit = false;

  /// floor(100 eps) + 10 steps of size 0.01 with a random start.
  static PgdConfig defaults_for(double epsilon);
  void validate() const;
};

/// delta* = -y sign(w) eps, sign(0) = 0. Maximizes the loss over the box
/// for every non-decreasing g.
Vector closed_form_perturbation(const LinearModel& model, int y, PerturbationBudget budget);

/// g(eps ||w||_1 - y(<w,x> + b)).
double adversarial_loss(const LossSpec& spec, const LinearModel& model,
                        std::span<const double> x, int y, PerturbationBudget budget);

/// -g'(eps||w||_1 - y(<w,x>+b)) (y x - sign(w) eps), over w.
Vector adversarial_loss_gradient(const LossSpec& spec, const LinearModel& model,
                                 std::span<const double> x, int y, PerturbationBudget budget);

/// Signed-gradient ascent projected onto the l-inf box after every step.
/// Returns the best iterate seen (the start included), so the final loss is
/// never below the loss at the start.
Vector pgd_perturbation(const LossSpec& spec, const MlpModel& model, std::span<const double> x,
                        int y, PerturbationBudget budget, const PgdConfig& cfg);

/// Independent closed-form perturbation per head, with head labels ±1.
std::vector<Vector> one_vs_all_perturbation(const OneVsAllModel& model, std::size_t cls,
                                            PerturbationBudget budget);

}  // namespace attrsparse
