#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "attrsparse/data.hpp"
#include "attrsparse/models.hpp"

namespace attrsparse {

struct AttributionVector {
  Vector values;
  Vector baseline;
  std::string target;  // which output was attributed
  double f_x = 0.0;
  double f_u = 0.0;
  /// |sum(values) - (F(x) - F(u))|
  double completeness_residual = 0.0;
  /// Closed form with <x-u, w> = 0 and F(x) = F(u): values are zero.
  bool degenerate = false;
};

/// A differentiable scalar function of the input.
struct ScalarField {
  std::function<double(std::span<const double>)> value;
  std::function<Vector(std::span<const double>)> gradient;
  std::string description;
};

/// Midpoint rule over `steps` equal sub-intervals of the straight path u -> x.
AttributionVector ig_numeric(const ScalarField& f, std::span<const double> x,
                             std::span<const double> u, std::size_t steps);

/// Exact IG of F(x) = A(<w,x> + b):
///   [F(x) - F(u)] (x - u) * w / <x - u, w>.
AttributionVector ig_closed_form(std::span<const double> w, double b,
                                 const std::function<double(double)>& activation,
                                 std::span<const double> x, std::span<const double> u);
AttributionVector ig_closed_form(const LinearModel& model, std::span<const double> x,
                                 std::span<const double> u);

/// Probability of the true class: A(y(<w,x>+b)) for a sigmoid model.
ScalarField true_class_field(const LinearModel& model, int y);
ScalarField true_class_field(const MlpModel& model, int y);

/// Closed form on the true-class probability (w and b negated for y = -1).
AttributionVector ig_true_class(const LinearModel& model, std::span<const double> x, int y,
                                std::span<const double> u);

enum class IgMethod { closed, numeric };
IgMethod parse_ig_method(const std::string& name);

/// One attribution per row of `split`, in row order, attributing the
/// true-class probability.
std::vector<AttributionVector> attribute_dataset(const LinearModel& model, const Dataset& ds,
                                                 Split split, std::span<const double> u,
                                                 IgMethod method, std::size_t steps = 256);
std::vector<AttributionVector> attribute_dataset(const MlpModel& model, const Dataset& ds,
                                                 Split split, std::span<const double> u,
                                                 std::size_t steps = 256);

/// FV per encoded position (mean |IG_i|), FI per original column (FV summed
/// over its one-hot span; equal to FV for numeric columns).
struct ImpactReport {
  std::vector<std::string> value_names;
  Vector fv;
  std::vector<std::string> feature_names;
  Vector fi;
};

ImpactReport impact_report(const std::vector<AttributionVector>& attribs, const Dataset& ds);

/// example_id,feature,value rows.
std::string attributions_csv(const std::vector<AttributionVector>& attribs,
                             const std::vector<std::string>& feature_names);
std::string impact_fv_csv(const ImpactReport& r);
std::string impact_fi_csv(const ImpactReport& r);

/// Binary (P5) graymap of |values| scaled so the largest magnitude is 255.
std::string attribution_pgm(const AttributionVector& a, ImageShape shape);

}  // namespace attrsparse
