#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attrsparse/common.hpp"

namespace attrsparse {

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class ColumnType { numeric, categorical };
enum class LabelKind { binary, multiclass };
enum class Split { train, test };

struct ColumnSpec {
  std::string name;
  ColumnType type = ColumnType::numeric;
  /// Declared category order. Empty means first-seen order in the
  /// training split.
  std::vector<std::string> categories;
};

struct Transforms {
  bool log1p = false;
  bool standardize = false;
};

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

struct Schema {
  std::vector<ColumnSpec> columns;
  std::string label_column;
  LabelKind label_kind = LabelKind::binary;
  /// Value mapped to +1 for binary labels. If absent the larger of the two
  /// values is positive: numerically when both parse, else lexicographically.
  std::optional<std::string> positive_label;
  char delimiter = ',';
  Transforms transforms;
  double train_fraction = 0.7;
  std::uint64_t split_seed = 0;
  std::optional<ImageShape> image_shape;
};

Schema parse_schema(const std::string& json_text);
Schema load_schema(const std::filesystem::path& path);
std::string schema_to_json(const Schema& schema);

/// Where one original column lives in the encoded feature vector.
struct EncodedColumn {
  std::string name;
  ColumnType type = ColumnType::numeric;
  std::size_t offset = 0;
  std::size_t width = 1;
  std::vector<std::string> categories;  // categorical only

  friend bool operator==(const EncodedColumn&, const EncodedColumn&) = default;
};

/// Per-feature affine preprocessing fitted on the training split.
struct Preprocessing {
  bool log1p = false;
  bool standardize = false;
  Vector center;  // subtracted after the optional log1p
  Vector scale;   // divided after centering
  /// Set once translate_features has shifted the features; one-hot
  /// groups no longer hold 0/1 values afterwards.
  bool translated = false;
};

struct Dataset {
  Matrix features;
  /// Binary: -1/+1. Multi-class: class index in [0, class_names.size()).
  std::vector<int> labels;
  LabelKind label_kind = LabelKind::binary;
  /// Binary: {negative, positive}. Multi-class: index order.
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  std::vector<EncodedColumn> encoding_map;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.7;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::optional<ImageShape> image_shape;
  Preprocessing preprocessing;

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t dim() const noexcept { return features.cols(); }
  std::span<const double> x(std::size_t row) const { return features.row(row); }
  int y(std::size_t row) const { return labels[row]; }
  const std::vector<std::size_t>& rows(Split split) const {
    return split == Split::train ? train_rows : test_rows;
  }
  std::size_t num_classes() const { return class_names.size(); }

  /// Throws DataError if any structural invariant is broken.
  void validate() const;
};

/// Seeded shuffled split of [0, n) into train/test index lists.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(
    std::size_t n, double train_fraction, std::uint64_t seed);

/// Reads a headered CSV, one-hot encodes categoricals, maps labels and
/// applies the schema's transforms with statistics from the train split.
Dataset load_csv(const std::filesystem::path& path, const Schema& schema);

/// Loads `path` using `<stem>.schema.json` beside it when present,
/// otherwise treats every non-label column as numeric.
Dataset load_csv_auto(const std::filesystem::path& path,
                      const std::optional<std::filesystem::path>& schema_path,
                      const std::string& label_column_fallback = {});

/// Recovers the original (pre-encoding) values of one row. Numeric values
/// are returned in encoded space formatted with round-trip precision.
std::vector<std::string> decode_row(const Dataset& ds, std::size_t row);

/// Writes features and label as a headered CSV (label column last, named
/// "label") using the class names.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// JSON sidecar describing encoding, labels, split and preprocessing.
std::string sidecar_json(const Dataset& ds);
void write_sidecar(const Dataset& ds, const std::filesystem::path& path);

struct DatasetMetadata {
  int version = 0;
  std::vector<std::string> feature_names;
  std::vector<EncodedColumn> encoding_map;
  LabelKind label_kind = LabelKind::binary;
  std::vector<std::string> class_names;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.7;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::optional<ImageShape> image_shape;
};
DatasetMetadata parse_sidecar(const std::string& json_text);

// ---------------------------------------------------------------------------
// Feature translation

struct FeatureStrengths {
  Vector a;
};

struct Translation {
  Dataset dataset;
  FeatureStrengths strengths;
  Vector shift;
};

/// Shifts each feature by the midpoint of its two class-conditional means
/// (estimated on the training split) and returns the directed strengths
/// a_i = (mean(x_i | y=+1) - mean(x_i | y=-1)) / 2.
Translation translate_features(const Dataset& ds);

/// Class-conditional means over the given rows: {mean | y=-1, mean | y=+1}.
std::pair<Vector, Vector> class_conditional_means(const Dataset& ds,
                                                  std::span<const std::size_t> rows);

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticSpec {
  Vector a;          // directed strengths
  Vector noise_sd;   // per-feature standard deviation
  double class_balance = 0.5;
  double train_fraction = 0.7;
  std::uint64_t seed = 0;

  std::size_t dim() const { return a.size(); }
  void validate() const;
};

/// Labels drawn with P(y=+1) = class_balance, features drawn independently
/// as a_i * y + N(0, noise_sd_i^2).
Dataset generate_synthetic(const SyntheticSpec& spec, std::size_t n);

/// Two-class image task: a Gaussian blob whose centre distribution depends
/// on the class, over a uniform noisy background with a faint
/// class-dependent tint. Pixels are clamped to [0, 1].
struct BlobImageSpec {
  std::size_t height = 8;
  std::size_t width = 8;
  double blob_sigma = 1.0;
  double blob_amplitude = 1.0;
  double background_max = 0.3;
  double tint = 0.04;
  /// Centre coordinate ranges (row and column drawn independently).
  double positive_lo = 1.0, positive_hi = 4.5;
  double negative_lo = 2.5, negative_hi = 6.0;
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
};

Dataset generate_blob_images(const BlobImageSpec& spec, std::size_t n);

}  // namespace attrsparse
