#include "attrsparse/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "attrsparse/io.hpp"
#include "attrsparse/rng.hpp"

namespace attrsparse {

using nlohmann::json;

namespace {

constexpr int kSidecarVersion = 1;
constexpr int kSchemaVersion = 1;

const char* to_string(ColumnType t) {
  return t == ColumnType::numeric ? "numeric" : "categorical";
}

ColumnType column_type_from(const std::string& s) {
  if (s == "numeric") return ColumnType::numeric;
  if (s == "categorical") return ColumnType::categorical;
  throw DataError("schema: unknown column type '" + s + "'");
}

const char* to_string(LabelKind k) { return k == LabelKind::binary ? "binary" : "multiclass"; }

LabelKind label_kind_from(const std::string& s) {
  if (s == "binary") return LabelKind::binary;
  if (s == "multiclass") return LabelKind::multiclass;
  throw DataError("schema: unknown label_kind '" + s + "'");
}

json encoding_to_json(const std::vector<EncodedColumn>& map) {
  json arr = json::array();
  for (const auto& col : map) {
    json j{{"name", col.name},
           {"type", to_string(col.type)},
           {"offset", col.offset},
           {"width", col.width}};
    if (col.type == ColumnType::categorical) j["categories"] = col.categories;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<EncodedColumn> encoding_from_json(const json& arr) {
  std::vector<EncodedColumn> out;
  for (const auto& j : arr) {
    EncodedColumn col;
    col.name = j.at("name").get<std::string>();
    col.type = column_type_from(j.at("type").get<std::string>());
    col.offset = j.at("offset").get<std::size_t>();
    col.width = j.at("width").get<std::size_t>();
    if (j.contains("categories")) col.categories = j["categories"].get<std::vector<std::string>>();
    out.push_back(std::move(col));
  }
  return out;
}

std::string row_context(std::size_t data_row) {
  return "row " + std::to_string(data_row + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Schema

Schema parse_schema(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("schema: invalid JSON: ") + e.what());
  }
  try {
    Schema s;
    if (j.contains("version") && j["version"].get<int>() > kSchemaVersion)
      throw DataError("schema: unsupported version " + j["version"].dump());
    s.label_column = j.at("label_column").get<std::string>();
    if (j.contains("label_kind")) s.label_kind = label_kind_from(j["label_kind"].get<std::string>());
    if (j.contains("positive_label") && !j["positive_label"].is_null())
      s.positive_label = j["positive_label"].get<std::string>();
    if (j.contains("delimiter")) {
      const auto d = j["delimiter"].get<std::string>();
      if (d.size() != 1) throw DataError("schema: delimiter must be a single character");
      s.delimiter = d[0];
    }
    for (const auto& c : j.at("columns")) {
      ColumnSpec col;
      col.name = c.at("name").get<std::string>();
      col.type = column_type_from(c.value("type", std::string("numeric")));
      if (c.contains("categories")) col.categories = c["categories"].get<std::vector<std::string>>();
      s.columns.push_back(std::move(col));
    }
    if (j.contains("transforms")) {
      s.transforms.log1p = j["transforms"].value("log1p", false);
      s.transforms.standardize = j["transforms"].value("standardize", false);
    }
    if (j.contains("split")) {
      s.train_fraction = j["split"].value("train_fraction", 0.7);
      s.split_seed = j["split"].value("seed", std::uint64_t{0});
    }
    if (j.contains("image_shape")) {
      const auto shape = j["image_shape"].get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw DataError("schema: image_shape must be [height, width]");
      s.image_shape = ImageShape{shape[0], shape[1]};
    }
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("schema: ") + e.what());
  }
}

Schema load_schema(const std::filesystem::path& path) { return parse_schema(read_text_file(path)); }

std::string schema_to_json(const Schema& s) {
  json cols = json::array();
  for (const auto& c : s.columns) {
    json jc{{"name", c.name}, {"type", to_string(c.type)}};
    if (!c.categories.empty()) jc["categories"] = c.categories;
    cols.push_back(std::move(jc));
  }
  json j{{"version", kSchemaVersion},
         {"label_column", s.label_column},
         {"label_kind", to_string(s.label_kind)},
         {"delimiter", std::string(1, s.delimiter)},
         {"columns", std::move(cols)},
         {"transforms", {{"log1p", s.transforms.log1p}, {"standardize", s.transforms.standardize}}},
         {"split", {{"train_fraction", s.train_fraction}, {"seed", s.split_seed}}}};
  if (s.positive_label) j["positive_label"] = *s.positive_label;
  if (s.image_shape) j["image_shape"] = {s.image_shape->height, s.image_shape->width};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Dataset

void Dataset::validate() const {
  if (size() < 1) throw DataError("dataset: no examples");
  if (dim() < 1) throw DataError("dataset: no features");
  if (labels.size() != size()) throw DataError("dataset: label count does not match rows");
  if (feature_names.size() != dim()) throw DataError("dataset: feature name count mismatch");
  for (std::size_t r = 0; r < size(); ++r) {
    const int y = labels[r];
    const bool ok = label_kind == LabelKind::binary
                        ? (y == -1 || y == 1)
                        : (y >= 0 && static_cast<std::size_t>(y) < class_names.size());
    if (!ok) throw DataError("dataset: " + row_context(r) + ": label outside declared set");
  }
  std::vector<int> covered(dim(), 0);
  for (const auto& col : encoding_map) {
    if (col.offset + col.width > dim()) throw DataError("dataset: encoding span out of range");
    for (std::size_t k = 0; k < col.width; ++k) ++covered[col.offset + k];
    if (col.type == ColumnType::categorical && !preprocessing.translated) {
      for (std::size_t r = 0; r < size(); ++r) {
        double ones = 0.0;
        for (std::size_t k = 0; k < col.width; ++k) {
          const double v = features(r, col.offset + k);
          if (v != 0.0 && v != 1.0)
            throw DataError("dataset: one-hot group '" + col.name + "' has non-binary entry");
          ones += v;
        }
        if (ones != 1.0)
          throw DataError("dataset: one-hot group '" + col.name + "' does not have exactly one 1 in " +
                          row_context(r));
      }
    }
  }
  if (!encoding_map.empty() &&
      std::any_of(covered.begin(), covered.end(), [](int c) { return c != 1; }))
    throw DataError("dataset: encoding map does not partition the feature positions");
  if (image_shape && image_shape->height * image_shape->width != dim())
    throw DataError("dataset: image shape does not match feature dimension");
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t n,
                                                                         double train_fraction,
                                                                         std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw ConfigError("train_fraction must be in (0, 1]");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(mix_seed(seed, 0x5117));
  rng.shuffle(perm.begin(), perm.end());
  auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, std::min<std::size_t>(1, n), n);
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

namespace {

void apply_transforms(Dataset& ds, const Transforms& t) {
  Preprocessing& pre = ds.preprocessing;
  pre.log1p = t.log1p;
  pre.standardize = t.standardize;
  if (!t.log1p && !t.standardize) return;

  std::vector<bool> numeric(ds.dim(), false);
  for (const auto& col : ds.encoding_map)
    if (col.type == ColumnType::numeric) numeric[col.offset] = true;

  if (t.log1p) {
    for (std::size_t r = 0; r < ds.size(); ++r)
      for (std::size_t c = 0; c < ds.dim(); ++c) {
        if (!numeric[c]) continue;
        const double v = ds.features(r, c);
        if (!(v > -1.0))
          throw DataError(row_context(r) + ": log1p transform needs values > -1 in column '" +
                          ds.feature_names[c] + "'");
        ds.features(r, c) = std::log1p(v);
      }
  }
  pre.center.assign(ds.dim(), 0.0);
  pre.scale.assign(ds.dim(), 1.0);
  if (!t.standardize) return;

  const auto& rows = ds.train_rows;
  if (rows.empty()) throw DataError("standardize: empty training split");
  for (std::size_t c = 0; c < ds.dim(); ++c) {
    if (!numeric[c]) continue;
    double mean = 0.0;
    for (std::size_t r : rows) mean += ds.features(r, c);
    mean /= static_cast<double>(rows.size());
    double var = 0.0;
    for (std::size_t r : rows) {
      const double d = ds.features(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(rows.size());
    const double sd = std::sqrt(var);
    pre.center[c] = mean;
    pre.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  for (std::size_t r = 0; r < ds.size(); ++r)
    for (std::size_t c = 0; c < ds.dim(); ++c)
      ds.features(r, c) = (ds.features(r, c) - pre.center[c]) / pre.scale[c];
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  if (!std::filesystem::exists(path)) throw DataError("missing file: " + path.string());
  std::string text = read_text_file(path);
  if (text.starts_with("\xEF\xBB\xBF")) text.erase(0, 3);

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> header;
  {
    std::istringstream in(text);
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      auto fields = split_csv_record(line, schema.delimiter);
      if (!have_header) {
        header = std::move(fields);
        have_header = true;
        continue;
      }
      if (fields.size() != header.size())
        throw DataError(row_context(records.size()) + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(fields.size()));
      records.push_back(std::move(fields));
    }
    if (!have_header) throw DataError("CSV has no header row: " + path.string());
  }
  if (records.empty()) throw DataError("CSV has no data rows: " + path.string());

  std::unordered_map<std::string, std::size_t> col_index;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!col_index.emplace(header[i], i).second)
      throw DataError("CSV: duplicate column '" + header[i] + "'");
  }
  const auto label_it = col_index.find(schema.label_column);
  if (label_it == col_index.end())
    throw DataError("CSV: label column '" + schema.label_column + "' not found");
  std::set<std::string> named{schema.label_column};
  for (const auto& c : schema.columns) {
    if (!col_index.contains(c.name)) throw DataError("CSV: schema column '" + c.name + "' not found");
    named.insert(c.name);
  }
  for (const auto& h : header)
    if (!named.contains(h)) throw DataError("schema does not name CSV column '" + h + "'");
  if (schema.columns.empty()) throw DataError("schema has no feature columns");

  Dataset ds;
  const std::size_t n = records.size();
  ds.split_seed = schema.split_seed;
  ds.train_fraction = schema.train_fraction;
  std::tie(ds.train_rows, ds.test_rows) = split_rows(n, schema.train_fraction, schema.split_seed);
  std::vector<bool> is_train(n, false);
  for (std::size_t r : ds.train_rows) is_train[r] = true;

  // Labels.
  const std::size_t label_col = label_it->second;
  std::vector<std::string> distinct;
  for (const auto& rec : records)
    if (std::find(distinct.begin(), distinct.end(), rec[label_col]) == distinct.end())
      distinct.push_back(rec[label_col]);
  ds.label_kind = schema.label_kind;
  if (schema.label_kind == LabelKind::binary) {
    if (distinct.size() != 2)
      throw DataError("binary schema but label column '" + schema.label_column + "' has " +
                      std::to_string(distinct.size()) + " distinct values");
    std::string positive;
    if (schema.positive_label) {
      positive = *schema.positive_label;
      if (std::find(distinct.begin(), distinct.end(), positive) == distinct.end())
        throw DataError("positive label '" + positive + "' does not occur in the data");
    } else {
      // Numeric labels ("-1"/"+1", "0"/"1") compare by value.
      const auto a = parse_double(distinct[0]);
      const auto b = parse_double(distinct[1]);
      if (a && b)
        positive = *a > *b ? distinct[0] : distinct[1];
      else
        positive = std::max(distinct[0], distinct[1]);
    }
    const std::string negative = distinct[0] == positive ? distinct[1] : distinct[0];
    ds.class_names = {negative, positive};
    ds.labels.reserve(n);
    for (const auto& rec : records) ds.labels.push_back(rec[label_col] == positive ? 1 : -1);
  } else {
    if (distinct.size() < 2) throw DataError("multiclass label column has fewer than 2 values");
    std::sort(distinct.begin(), distinct.end());
    ds.class_names = distinct;
    for (const auto& rec : records) {
      const auto it = std::find(distinct.begin(), distinct.end(), rec[label_col]);
      ds.labels.push_back(static_cast<int>(it - distinct.begin()));
    }
  }

  // Encoding map.
  std::size_t offset = 0;
  for (const auto& spec : schema.columns) {
    EncodedColumn col;
    col.name = spec.name;
    col.type = spec.type;
    col.offset = offset;
    if (spec.type == ColumnType::categorical) {
      const std::size_t ci = col_index.at(spec.name);
      if (!spec.categories.empty()) {
        col.categories = spec.categories;
        for (std::size_t r = 0; r < n; ++r) {
          const auto& v = records[r][ci];
          if (std::find(col.categories.begin(), col.categories.end(), v) == col.categories.end())
            throw DataError(row_context(r) + ": unknown category '" + v + "' in column '" +
                            spec.name + "'");
        }
      } else {
        for (std::size_t r : ds.train_rows) {
          const auto& v = records[r][ci];
          if (std::find(col.categories.begin(), col.categories.end(), v) == col.categories.end())
            col.categories.push_back(v);
        }
        for (std::size_t r : ds.test_rows) {
          const auto& v = records[r][ci];
          if (std::find(col.categories.begin(), col.categories.end(), v) == col.categories.end())
            throw DataError(row_context(r) + ": category '" + v + "' in column '" + spec.name +
                            "' does not occur in the training split");
        }
      }
      col.width = col.categories.size();
      if (col.width == 0) throw DataError("column '" + spec.name + "' has no categories");
    }
    offset += col.width;
    ds.encoding_map.push_back(std::move(col));
  }

  ds.features = Matrix(n, offset);
  for (const auto& col : ds.encoding_map) {
    const std::size_t ci = col_index.at(col.name);
    if (col.type == ColumnType::numeric) {
      ds.feature_names.push_back(col.name);
      for (std::size_t r = 0; r < n; ++r) {
        const auto v = parse_double(records[r][ci]);
        if (!v || !std::isfinite(*v))
          throw DataError(row_context(r) + ": non-numeric value '" + records[r][ci] +
                          "' in numeric column '" + col.name + "'");
        ds.features(r, col.offset) = *v;
      }
    } else {
      for (const auto& cat : col.categories) ds.feature_names.push_back(col.name + "=" + cat);
      for (std::size_t r = 0; r < n; ++r) {
        const auto it = std::find(col.categories.begin(), col.categories.end(), records[r][ci]);
        ds.features(r, col.offset + static_cast<std::size_t>(it - col.categories.begin())) = 1.0;
      }
    }
  }
  ds.image_shape = schema.image_shape;
  ds.validate();
  apply_transforms(ds, schema.transforms);
  return ds;
}

Dataset load_csv_auto(const std::filesystem::path& path,
                      const std::optional<std::filesystem::path>& schema_path,
                      const std::string& label_column_fallback) {
  std::filesystem::path candidate = path;
  candidate.replace_extension(".schema.json");
  if (schema_path) return load_csv(path, load_schema(*schema_path));
  if (std::filesystem::exists(candidate)) return load_csv(path, load_schema(candidate));

  if (!std::filesystem::exists(path)) throw DataError("missing file: " + path.string());
  const std::string text = read_text_file(path);
  const auto eol = text.find('\n');
  auto header = split_csv_record(std::string_view(text).substr(0, eol), ',');
  if (header.empty()) throw DataError("CSV has no header row: " + path.string());
  Schema s;
  s.label_column = label_column_fallback.empty() ? header.back() : label_column_fallback;
  for (const auto& h : header)
    if (h != s.label_column) s.columns.push_back({h, ColumnType::numeric, {}});
  return load_csv(path, s);
}

std::vector<std::string> decode_row(const Dataset& ds, std::size_t row) {
  std::vector<std::string> out;
  for (const auto& col : ds.encoding_map) {
    if (col.type == ColumnType::numeric) {
      out.push_back(format_double(ds.features(row, col.offset)));
      continue;
    }
    std::string value;
    for (std::size_t k = 0; k < col.width; ++k)
      if (ds.features(row, col.offset + k) == 1.0) value = col.categories[k];
    out.push_back(value);
  }
  return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::string out;
  for (const auto& name : ds.feature_names) {
    out += name;
    out += ',';
  }
  out += "label\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t c = 0; c < ds.dim(); ++c) {
      out += format_double(ds.features(r, c));
      out += ',';
    }
    const int y = ds.labels[r];
    out += ds.label_kind == LabelKind::binary ? ds.class_names[y > 0 ? 1 : 0]
                                               : ds.class_names[static_cast<std::size_t>(y)];
    out += '\n';
  }
  write_text_file(path, out);
}

std::string sidecar_json(const Dataset& ds) {
  json j{{"format", "attrsparse-dataset"},
         {"version", kSidecarVersion},
         {"feature_names", ds.feature_names},
         {"encoding_map", encoding_to_json(ds.encoding_map)},
         {"label", {{"kind", to_string(ds.label_kind)}, {"class_names", ds.class_names}}},
         {"split", {{"seed", ds.split_seed},
                    {"train_fraction", ds.train_fraction},
                    {"train_count", ds.train_rows.size()},
                    {"test_count", ds.test_rows.size()}}},
         {"preprocessing", {{"log1p", ds.preprocessing.log1p},
                            {"standardize", ds.preprocessing.standardize}}}};
  if (ds.label_kind == LabelKind::binary)
    j["label"]["mapping"] = {{ds.class_names[0], -1}, {ds.class_names[1], 1}};
  if (ds.preprocessing.standardize) {
    std::vector<std::string> center, scale;
    for (double v : ds.preprocessing.center) center.push_back(format_double(v));
    for (double v : ds.preprocessing.scale) scale.push_back(format_double(v));
    j["preprocessing"]["center"] = center;
    j["preprocessing"]["scale"] = scale;
  }
  if (ds.image_shape) j["image_shape"] = {ds.image_shape->height, ds.image_shape->width};
  return j.dump(2) + "\n";
}

void write_sidecar(const Dataset& ds, const std::filesystem::path& path) {
  write_text_file(path, sidecar_json(ds));
}

DatasetMetadata parse_sidecar(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    if (j.value("format", std::string()) != "attrsparse-dataset")
      throw DataError("sidecar: not an attrsparse dataset sidecar");
    DatasetMetadata m;
    m.version = j.at("version").get<int>();
    if (m.version > kSidecarVersion) throw DataError("sidecar: unsupported version");
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.encoding_map = encoding_from_json(j.at("encoding_map"));
    m.label_kind = label_kind_from(j.at("label").at("kind").get<std::string>());
    m.class_names = j.at("label").at("class_names").get<std::vector<std::string>>();
    m.split_seed = j.at("split").at("seed").get<std::uint64_t>();
    m.train_fraction = j.at("split").at("train_fraction").get<double>();
    m.train_count = j.at("split").at("train_count").get<std::size_t>();
    m.test_count = j.at("split").at("test_count").get<std::size_t>();
    if (j.contains("image_shape")) {
      const auto s = j["image_shape"].get<std::vector<std::size_t>>();
      m.image_shape = ImageShape{s.at(0), s.at(1)};
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("sidecar: ") + e.what());
  }
}

}  // namespace attrsparse
