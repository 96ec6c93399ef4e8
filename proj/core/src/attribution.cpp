#include "attrsparse/attribution.hpp"

#include <algorithm>
#include <cmath>

#include "attrsparse/io.hpp"
#include "attrsparse/parallel.hpp"

namespace attrsparse {

namespace {

void finish(AttributionVector& a) {
  double s = 0.0;
  for (double v : a.values) s += v;
  a.completeness_residual = std::abs(s - (a.f_x - a.f_u));
}

}  // namespace

AttributionVector ig_numeric(const ScalarField& f, std::span<const double> x,
                             std::span<const double> u, std::size_t steps) {
  require_same_dim(x.size(), u.size(), "ig baseline");
  if (steps < 1) throw ConfigError("ig steps must be >= 1");
  const std::size_t d = x.size();
  Vector sum(d, 0.0), point(d);
  const double m = static_cast<double>(steps);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double alpha = (static_cast<double>(k) - 0.5) / m;
    for (std::size_t i = 0; i < d; ++i) point[i] = u[i] + alpha * (x[i] - u[i]);
    const Vector g = f.gradient(point);
    require_same_dim(g.size(), d, "ig gradient");
    for (std::size_t i = 0; i < d; ++i) sum[i] += g[i];
  }
  AttributionVector a;
  a.values.resize(d);
  for (std::size_t i = 0; i < d; ++i) a.values[i] = (x[i] - u[i]) * sum[i] / m;
  a.baseline.assign(u.begin(), u.end());
  a.target = f.description;
  a.f_x = f.value(x);
  a.f_u = f.value(u);
  finish(a);
  return a;
}

AttributionVector ig_closed_form(std::span<const double> w, double b,
                                 const std::function<double(double)>& activation,
                                 std::span<const double> x, std::span<const double> u) {
  require_same_dim(x.size(), w.size(), "ig input");
  require_same_dim(u.size(), w.size(), "ig baseline");
  const std::size_t d = w.size();
  AttributionVector a;
  a.baseline.assign(u.begin(), u.end());
  a.f_x = activation(dot(w, x) + b);
  a.f_u = activation(dot(w, u) + b);
  a.values.assign(d, 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < d; ++i) denom += (x[i] - u[i]) * w[i];
  const double df = a.f_x - a.f_u;
  if (denom == 0.0) {
    if (std::abs(df) > 1e-12 * (1.0 + std::abs(a.f_x)))
      throw Error("ig closed form: zero logit change but F(x) != F(u)");
    a.degenerate = true;
  } else {
    const double scale = df / denom;
    for (std::size_t i = 0; i < d; ++i) a.values[i] = scale * (x[i] - u[i]) * w[i];
  }
  finish(a);
  if (a.degenerate) a.completeness_residual = std::abs(df);
  return a;
}

AttributionVector ig_closed_form(const LinearModel& model, std::span<const double> x,
                                 std::span<const double> u) {
  auto a = ig_closed_form(model.w, model.bias_or_zero(),
                          [&](double z) { return model.activate(z); }, x, u);
  a.target = "model output";
  return a;
}

ScalarField true_class_field(const LinearModel& model, int y) {
  ScalarField f;
  f.description = "probability of true class " + std::string(y > 0 ? "+1" : "-1");
  f.value = [model, y](std::span<const double> x) { return model.activate(y * model.logit(x)); };
  f.gradient = [model, y](std::span<const double> x) {
    const double z = y * model.logit(x);
    double c = y;
    if (model.activation == Activation::sigmoid) {
      const double s = sigmoid(z);
      c *= s * (1.0 - s);
    }
    Vector g(model.w.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = c * model.w[i];
    return g;
  };
  return f;
}

ScalarField true_class_field(const MlpModel& model, int y) {
  ScalarField f;
  f.description = "probability of true class " + std::string(y > 0 ? "+1" : "-1");
  f.value = [&model, y](std::span<const double> x) { return sigmoid(y * model.logit(x)); };
  f.gradient = [&model, y](std::span<const double> x) {
    double logit = 0.0;
    Vector g = mlp_logit_input_gradient(model, x, &logit);
    const double s = sigmoid(y * logit);
    const double c = y * s * (1.0 - s);
    for (double& v : g) v *= c;
    return g;
  };
  return f;
}

AttributionVector ig_true_class(const LinearModel& model, std::span<const double> x, int y,
                                std::span<const double> u) {
  Vector w = model.w;
  if (y < 0)
    for (double& v : w) v = -v;
  const double b = y * model.bias_or_zero();
  auto a = ig_closed_form(w, b, [&](double z) { return model.activate(z); }, x, u);
  a.target = "probability of true class " + std::string(y > 0 ? "+1" : "-1");
  return a;
}

IgMethod parse_ig_method(const std::string& name) {
  if (name == "closed") return IgMethod::closed;
  if (name == "numeric") return IgMethod::numeric;
  throw ConfigError("unknown IG method '" + name + "' (valid: closed, numeric)");
}

std::vector<AttributionVector> attribute_dataset(const LinearModel& model, const Dataset& ds,
                                                 Split split, std::span<const double> u,
                                                 IgMethod method, std::size_t steps) {
  require_same_dim(u.size(), ds.dim(), "baseline");
  require_same_dim(model.dim(), ds.dim(), "model");
  const auto& rows = ds.rows(split);
  std::vector<AttributionVector> out(rows.size());
  parallel_for(rows.size(), [&](std::size_t k) {
    const std::size_t r = rows[k];
    out[k] = method == IgMethod::closed
                 ? ig_true_class(model, ds.x(r), ds.y(r), u)
                 : ig_numeric(true_class_field(model, ds.y(r)), ds.x(r), u, steps);
  });
  return out;
}

std::vector<AttributionVector> attribute_dataset(const MlpModel& model, const Dataset& ds,
                                                 Split split, std::span<const double> u,
                                                 std::size_t steps) {
  require_same_dim(u.size(), ds.dim(), "baseline");
  require_same_dim(model.input_dim(), ds.dim(), "model");
  const auto& rows = ds.rows(split);
  std::vector<AttributionVector> out(rows.size());
  parallel_for(rows.size(), [&](std::size_t k) {
    const std::size_t r = rows[k];
    out[k] = ig_numeric(true_class_field(model, ds.y(r)), ds.x(r), u, steps);
  });
  return out;
}

ImpactReport impact_report(const std::vector<AttributionVector>& attribs, const Dataset& ds) {
  if (attribs.empty()) throw Error("impact report: no attributions");
  const std::size_t d = ds.dim();
  ImpactReport r;
  r.value_names = ds.feature_names;
  r.fv.assign(d, 0.0);
  for (const auto& a : attribs) {
    require_same_dim(a.values.size(), d, "impact report attribution");
    for (std::size_t i = 0; i < d; ++i) r.fv[i] += std::abs(a.values[i]);
  }
  for (double& v : r.fv) v /= static_cast<double>(attribs.size());
  if (ds.encoding_map.empty()) {
    r.feature_names = r.value_names;
    r.fi = r.fv;
    return r;
  }
  for (const auto& col : ds.encoding_map) {
    double s = 0.0;
    for (std::size_t k = 0; k < col.width; ++k) s += r.fv[col.offset + k];
    r.feature_names.push_back(col.name);
    r.fi.push_back(s);
  }
  return r;
}

std::string attributions_csv(const std::vector<AttributionVector>& attribs,
                             const std::vector<std::string>& feature_names) {
  std::string out = "example_id,feature,value\n";
  for (std::size_t e = 0; e < attribs.size(); ++e) {
    const auto& v = attribs[e].values;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out += std::to_string(e);
      out += ',';
      out += i < feature_names.size() ? feature_names[i] : std::to_string(i);
      out += ',';
      out += format_double(v[i]);
      out += '\n';
    }
  }
  return out;
}

std::string impact_fv_csv(const ImpactReport& r) {
  std::string out = "feature_value,fv\n";
  for (std::size_t i = 0; i < r.fv.size(); ++i)
    out += r.value_names[i] + "," + format_double(r.fv[i]) + "\n";
  return out;
}

std::string impact_fi_csv(const ImpactReport& r) {
  std::string out = "feature,fi\n";
  for (std::size_t i = 0; i < r.fi.size(); ++i)
    out += r.feature_names[i] + "," + format_double(r.fi[i]) + "\n";
  return out;
}

std::string attribution_pgm(const AttributionVector& a, ImageShape shape) {
  require_same_dim(a.values.size(), shape.height * shape.width, "pgm shape");
  double peak = 0.0;
  for (double v : a.values) peak = std::max(peak, std::abs(v));
  std::string out = "P5\n" + std::to_string(shape.width) + " " + std::to_string(shape.height) +
                    "\n255\n";
  for (double v : a.values) {
    const double level = peak > 0.0 ? std::round(255.0 * std::abs(v) / peak) : 0.0;
    out += static_cast<char>(static_cast<unsigned char>(level));
  }
  return out;
}

}  // namespace attrsparse
