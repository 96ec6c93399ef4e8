#include <cmath>

#include "attrsparse/data.hpp"

namespace attrsparse {

std::pair<Vector, Vector> class_conditional_means(const Dataset& ds,
                                                  std::span<const std::size_t> rows) {
  if (ds.label_kind != LabelKind::binary)
    throw DataError("class-conditional means need binary labels");
  const std::size_t d = ds.dim();
  Vector neg(d, 0.0), pos(d, 0.0);
  std::size_t n_neg = 0, n_pos = 0;
  for (std::size_t r : rows) {
    if (r >= ds.size()) throw DataError("row index out of range");
    const auto x = ds.x(r);
    Vector& acc = ds.y(r) > 0 ? pos : neg;
    (ds.y(r) > 0 ? n_pos : n_neg)++;
    for (std::size_t i = 0; i < d; ++i) acc[i] += x[i];
  }
  if (n_neg == 0 || n_pos == 0)
    throw DataError("class-conditional means: a class is absent from the given rows");
  for (std::size_t i = 0; i < d; ++i) {
    neg[i] /= static_cast<double>(n_neg);
    pos[i] /= static_cast<double>(n_pos);
  }
  return {std::move(neg), std::move(pos)};
}

Translation translate_features(const Dataset& ds) {
  const auto [neg, pos] = class_conditional_means(ds, ds.train_rows);
  const std::size_t d = ds.dim();
  Translation t;
  t.dataset = ds;
  t.shift.resize(d);
  t.strengths.a.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    t.shift[i] = 0.5 * (pos[i] + neg[i]);
    t.strengths.a[i] = 0.5 * (pos[i] - neg[i]);
  }
  for (std::size_t r = 0; r < t.dataset.size(); ++r) {
    auto row = t.dataset.features.row(r);
    for (std::size_t i = 0; i < d; ++i) row[i] -= t.shift[i];
  }
  t.dataset.preprocessing.translated = true;
  return t;
}

}  // namespace attrsparse
