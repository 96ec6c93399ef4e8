#include "attrsparse/gini.hpp"

#include <algorithm>
#include <cmath>

namespace attrsparse {

namespace {

Vector sorted_checked(std::span<const double> v) {
  for (double x : v)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw DataError("gini: entries must be finite and non-negative");
  Vector s(v.begin(), v.end());
  std::stable_sort(s.begin(), s.end());
  return s;
}

}  // namespace

GiniValue gini(std::span<const double> v) {
  if (v.empty()) return {0.0, true};
  const Vector s = sorted_checked(v);
  double total = 0.0;
  for (double x : s) total += x;
  if (total == 0.0) return {0.0, true};
  const std::size_t d = s.size();
  double acc = 0.0;
  for (std::size_t k = 1; 2 * k <= d; ++k)
    acc += static_cast<double>(d + 1 - 2 * k) * (s[d - k] - s[k - 1]);
  return {acc / (static_cast<double>(d) * total), false};
}

double gini_lorenz(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const Vector s = sorted_checked(v);
  double total = 0.0;
  for (double x : s) total += x;
  if (total == 0.0) return 0.0;
  const double d = static_cast<double>(s.size());
  double prev = 0.0, cum = 0.0, area = 0.0;
  for (double x : s) {
    cum += x / total;
    area += 0.5 * (prev + cum) / d;
    prev = cum;
  }
  return 1.0 - 2.0 * area;
}

GiniValue gini_abs(std::span<const double> v) {
  Vector a(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) a[i] = std::abs(v[i]);
  return gini(a);
}

GiniValue gini_of_attribution(const AttributionVector& a) { return gini_abs(a.values); }

}  // namespace attrsparse
