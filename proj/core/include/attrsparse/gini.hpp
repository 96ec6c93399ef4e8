#pragma once

#include <span>

#include "attrsparse/attribution.hpp"

namespace attrsparse {

struct GiniValue {
  double value = 0.0;
  /// The input summed to zero; value is reported as 0.
  bool degenerate = false;
};

/// Gini index of a non-negative vector, ascending sort:
///   G = 1 - 2 sum_k (v_(k)/|v|_1) (d - k + 1/2) / d,
/// evaluated in the pairwise form
///   G = sum_{k <= d/2} (d + 1 - 2k)(v_(d+1-k) - v_(k)) / (d |v|_1)
/// which is exact for equal entries and never leaves [0, 1).
/// Throws DataError on a negative or non-finite entry.
GiniValue gini(std::span<const double> v);

/// 1 - 2 * (trapezoid area under the Lorenz curve).
double gini_lorenz(std::span<const double> v);

/// gini(|values|).
GiniValue gini_of_attribution(const AttributionVector& a);
GiniValue gini_abs(std::span<const double> v);

}  // namespace attrsparse
