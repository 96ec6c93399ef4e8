#include <algorithm>
#include <cmath>
#include <string>

#include "attrsparse/data.hpp"
#include "attrsparse/rng.hpp"

namespace attrsparse {

namespace {

// Numeric encoding map, generic names and binary class names.
void finish_numeric(Dataset& ds, double train_fraction, std::uint64_t seed,
                    const std::string& prefix) {
  const std::size_t d = ds.dim();
  ds.class_names = {"-1", "+1"};
  ds.label_kind = LabelKind::binary;
  for (std::size_t i = 0; i < d; ++i) {
    ds.feature_names.push_back(prefix + std::to_string(i));
    ds.encoding_map.push_back({ds.feature_names.back(), ColumnType::numeric, i, 1, {}});
  }
  ds.split_seed = seed;
  ds.train_fraction = train_fraction;
  std::tie(ds.train_rows, ds.test_rows) = split_rows(ds.size(), train_fraction, seed);
}

}  // namespace

void SyntheticSpec::validate() const {
  if (a.empty()) throw ConfigError("synthetic: dimension must be >= 1");
  require_same_dim(a.size(), noise_sd.size(), "synthetic noise_sd");
  if (!all_finite(a)) throw ConfigError("synthetic: strengths must be finite");
  for (double s : noise_sd)
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("synthetic: noise_sd must be > 0");
  if (!(class_balance > 0.0 && class_balance < 1.0))
    throw ConfigError("synthetic: class_balance must be in (0, 1)");
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::size_t n) {
  spec.validate();
  if (n < 1) throw ConfigError("synthetic: n must be >= 1");
  const std::size_t d = spec.dim();
  Rng rng(spec.seed);
  Dataset ds;
  ds.features = Matrix(n, d);
  ds.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const int y = rng.bernoulli(spec.class_balance) ? 1 : -1;
    ds.labels[r] = y;
    for (std::size_t i = 0; i < d; ++i)
      ds.features(r, i) = spec.a[i] * y + spec.noise_sd[i] * rng.normal();
  }
  finish_numeric(ds, spec.train_fraction, spec.seed, "x");
  return ds;
}

Dataset generate_blob_images(const BlobImageSpec& spec, std::size_t n) {
  if (n < 1) throw ConfigError("blob images: n must be >= 1");
  if (spec.height == 0 || spec.width == 0) throw ConfigError("blob images: empty shape");
  if (!(spec.blob_sigma > 0.0)) throw ConfigError("blob images: blob_sigma must be > 0");
  const std::size_t d = spec.height * spec.width;
  Rng rng(spec.seed);
  Dataset ds;
  ds.features = Matrix(n, d);
  ds.labels.resize(n);
  const double inv2s2 = 1.0 / (2.0 * spec.blob_sigma * spec.blob_sigma);
  for (std::size_t r = 0; r < n; ++r) {
    const int y = rng.bernoulli(0.5) ? 1 : -1;
    ds.labels[r] = y;
    const double lo = y > 0 ? spec.positive_lo : spec.negative_lo;
    const double hi = y > 0 ? spec.positive_hi : spec.negative_hi;
    const double cr = rng.uniform(lo, hi);
    const double cc = rng.uniform(lo, hi);
    for (std::size_t i = 0; i < spec.height; ++i)
      for (std::size_t j = 0; j < spec.width; ++j) {
        const double dr = static_cast<double>(i) - cr;
        const double dc = static_cast<double>(j) - cc;
        double v = spec.blob_amplitude * std::exp(-(dr * dr + dc * dc) * inv2s2) +
                   rng.uniform(0.0, spec.background_max) + spec.tint * y;
        ds.features(r, i * spec.width + j) = std::clamp(v, 0.0, 1.0);
      }
  }
  finish_numeric(ds, spec.train_fraction, spec.seed, "px");
  ds.image_shape = ImageShape{spec.height, spec.width};
  return ds;
}

}  // namespace attrsparse
