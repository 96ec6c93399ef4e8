#include "attrsparse/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "attrsparse/attribution.hpp"
#include "attrsparse/parallel.hpp"

namespace attrsparse {

using nlohmann::json;

namespace {

// Running mean / sum of squared deviations; merged pairwise (Chan et al.).
struct Moments {
  double n = 0.0, mean = 0.0, m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
  }
  Estimate estimate() const {
    Estimate e;
    e.n = static_cast<std::size_t>(n);
    e.mean = mean;
    e.se = n > 1.0 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
    return e;
  }
};

// Runs `sample(rng, out)` n times, `k` statistics per sample, in seeded
// chunks, and returns the merged moments in chunk order.
template <typename F>
std::vector<Moments> monte_carlo(std::size_t n, std::uint64_t seed, std::size_t k, F sample) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::vector<Moments>> parts(chunks, std::vector<Moments>(k));
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng(mix_seed(seed, c));
    const std::size_t count = std::min(kChunk, n - c * kChunk);
    Vector out(k);
    for (std::size_t s = 0; s < count; ++s) {
      sample(rng, out);
      for (std::size_t j = 0; j < k; ++j) parts[c][j].add(out[j]);
    }
  });
  std::vector<Moments> total(k);
  for (const auto& p : parts)
    for (std::size_t j = 0; j < k; ++j) total[j].merge(p[j]);
  return total;
}

double adv_margin(const Vector& w, double w_l1, double epsilon, std::span<const double> x, int y) {
  return epsilon * w_l1 - y * dot(w, x);
}

json vec_json(const Vector& v) { return json(v); }

}  // namespace

void FeatureSampler::validate() const {
  if (a.empty()) throw ConfigError("sampler: empty dimension");
  require_same_dim(a.size(), sd.size(), "sampler sd");
  if (!in_s.empty()) require_same_dim(a.size(), in_s.size(), "sampler subset mask");
  for (double s : sd)
    if (!(s > 0.0)) throw ConfigError("sampler: sd must be > 0");
  if (!(rho >= -1.0 && rho <= 1.0)) throw ConfigError("sampler: rho must be in [-1, 1]");
  if (!(class_balance > 0.0 && class_balance < 1.0))
    throw ConfigError("sampler: class_balance must be in (0, 1)");
}

int FeatureSampler::draw(Rng& rng, std::span<double> x) const {
  const int y = rng.bernoulli(class_balance) ? 1 : -1;
  const bool shared = !in_s.empty() && rho != 0.0;
  const double xi = shared ? rng.normal() : 0.0;
  const double keep = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double noise = (in_s.empty() || in_s[i]) ? rng.normal() : rho * xi + keep * rng.normal();
    x[i] = a[i] * y + sd[i] * noise;
  }
  return y;
}

Estimate estimate_gprimebar(const LossSpec& spec, const Vector& w, double epsilon,
                            const FeatureSampler& sampler, std::size_t n, std::uint64_t seed) {
  sampler.validate();
  require_same_dim(w.size(), sampler.dim(), "gprimebar weights");
  const double wl1 = l1_norm(w);
  const auto m = monte_carlo(n, seed, 1, [&](Rng& rng, Vector& out) {
    Vector x(sampler.dim());
    const int y = sampler.draw(rng, x);
    out[0] = spec.gprime(adv_margin(w, wl1, epsilon, x, y));
  });
  return m[0].estimate();
}

std::vector<Estimate> expected_update(const LossSpec& spec, const Vector& w, double epsilon,
                                      const FeatureSampler& sampler, std::size_t n,
                                      std::uint64_t seed) {
  sampler.validate();
  const std::size_t d = sampler.dim();
  require_same_dim(w.size(), d, "expected update weights");
  const double wl1 = l1_norm(w);
  const auto m = monte_carlo(n, seed, d, [&](Rng& rng, Vector& out) {
    Vector x(d);
    const int y = sampler.draw(rng, x);
    const double gp = spec.gprime(adv_margin(w, wl1, epsilon, x, y));
    for (std::size_t i = 0; i < d; ++i) out[i] = gp * (y * x[i] - sign(w[i]) * epsilon);
  });
  std::vector<Estimate> est;
  for (const auto& mm : m) est.push_back(mm.estimate());
  return est;
}

std::vector<TheoremCheckResult> check_theorem1_zero(const LossSpec& spec, double epsilon,
                                                    const FeatureSampler& sampler, std::size_t n,
                                                    std::uint64_t seed) {
  sampler.validate();
  const std::size_t d = sampler.dim();
  const Vector w(d, 0.0);
  // Columns: Delta_i - g' a_i for each i, then g'.
  const auto m = monte_carlo(n, seed, d + 1, [&](Rng& rng, Vector& out) {
    Vector x(d);
    const int y = sampler.draw(rng, x);
    const double gp = spec.gprime(adv_margin(w, 0.0, epsilon, x, y));
    for (std::size_t i = 0; i < d; ++i) out[i] = gp * (y * x[i]) - gp * sampler.a[i];
    out[d] = gp;
  });
  const double gbar = m[d].mean;
  std::vector<TheoremCheckResult> results;
  for (std::size_t i = 0; i < d; ++i) {
    const Estimate diff = m[i].estimate();
    TheoremCheckResult r;
    r.id = "thm1-zero";
    r.config = json{{"loss", spec.name()}, {"epsilon", epsilon}, {"coordinate", i},
                    {"a_i", sampler.a[i]}}.dump();
    r.bound = gbar * sampler.a[i];
    r.estimate = r.bound + diff.mean;
    r.se = diff.se;
    r.samples = diff.n;
    r.pass = std::abs(diff.mean) <= 3.0 * diff.se || diff.mean == 0.0;
    r.detail = "mean update vs gbar' * a_i";
    results.push_back(std::move(r));
  }
  return results;
}

void WeightedAverageSpec::validate() const {
  if (S.empty()) throw ConfigError("weighted average: S must be non-empty");
  double s = 0.0;
  for (std::size_t i : S) {
    if (i >= w.size()) throw ConfigError("weighted average: index out of range");
    s += std::abs(w[i]);
  }
  if (!(s > 0.0)) throw ConfigError("weighted average: sum of |w_i| over S must be > 0");
}

double WeightedAverageSpec::average(const Vector& q) const {
  double num = 0.0, den = 0.0;
  for (std::size_t i : S) {
    num += w[i] * q[i];
    den += std::abs(w[i]);
  }
  return num / den;
}

namespace {

// Per-sample (average update over S, g', Q) for weights w. The average over
// S is scale-free, so it uses the direction ws.w; w only enters the margin.
// That keeps w_S = 0 (the limit point) well defined.
void bound_stats(const LossSpec& spec, const WeightedAverageSpec& ws, const Vector& w, double wl1,
                 double abar, double epsilon, std::span<const double> x, int y, double* out) {
  const double gp = spec.gprime(adv_margin(w, wl1, epsilon, x, y));
  double num = 0.0, den = 0.0;
  for (std::size_t i : ws.S) {
    num += ws.w[i] * gp * (y * x[i] - sign(ws.w[i]) * epsilon);
    den += std::abs(ws.w[i]);
  }
  out[0] = num / den;
  out[1] = gp;
  out[2] = out[0] - gp * (abar - epsilon);
}

}  // namespace

TheoremCheckResult check_theorem1_bound(const LossSpec& spec, const WeightedAverageSpec& ws,
                                        double epsilon, const FeatureSampler& sampler,
                                        std::size_t n, std::uint64_t seed) {
  sampler.validate();
  ws.validate();
  require_same_dim(ws.w.size(), sampler.dim(), "bound weights");
  const double abar = ws.average(sampler.a);
  const double wl1 = l1_norm(ws.w);
  const auto m = monte_carlo(n, seed, 3, [&](Rng& rng, Vector& out) {
    Vector x(sampler.dim());
    const int y = sampler.draw(rng, x);
    bound_stats(spec, ws, ws.w, wl1, abar, epsilon, x, y, out.data());
  });
  const Estimate gap = m[2].estimate();
  TheoremCheckResult r;
  r.id = "thm1-bound";
  r.config = json{{"loss", spec.name()}, {"epsilon", epsilon}, {"S", ws.S},
                  {"w", vec_json(ws.w)}, {"a", vec_json(sampler.a)}, {"rho", sampler.rho},
                  {"abar_w", abar}}.dump();
  r.estimate = m[0].mean;
  r.bound = m[1].mean * (abar - epsilon);
  r.se = gap.se;
  r.samples = gap.n;
  r.pass = gap.mean <= 3.0 * gap.se;
  r.detail = "gap " + json(gap.mean).dump();
  return r;
}

LimitCheck check_theorem1_limit(const LossSpec& spec, const WeightedAverageSpec& ws,
                                double epsilon, const FeatureSampler& sampler, std::size_t n,
                                std::uint64_t seed, std::vector<double> scales) {
  sampler.validate();
  ws.validate();
  const std::size_t k = scales.size();
  for (double s : scales)
    if (!(s >= 0.0)) throw ConfigError("limit check: scales must be >= 0");
  std::vector<Vector> weights;
  Vector wl1s;
  for (double s : scales) {
    Vector w = ws.w;
    for (std::size_t i : ws.S) w[i] *= s;
    wl1s.push_back(l1_norm(w));
    weights.push_back(std::move(w));
  }
  const double abar = ws.average(sampler.a);  // scale-free
  const auto m = monte_carlo(n, seed, k, [&](Rng& rng, Vector& out) {
    Vector x(sampler.dim());
    const int y = sampler.draw(rng, x);
    double stats[3];
    for (std::size_t j = 0; j < k; ++j) {
      bound_stats(spec, ws, weights[j], wl1s[j], abar, epsilon, x, y, stats);
      out[j] = stats[2];
    }
  });
  LimitCheck lc;
  lc.scales = std::move(scales);
  for (const auto& mm : m) lc.gap.push_back(mm.estimate());
  lc.monotone = true;
  for (std::size_t j = 1; j < k; ++j) {
    const double slack =
        3.0 * std::sqrt(lc.gap[j].se * lc.gap[j].se + lc.gap[j - 1].se * lc.gap[j - 1].se);
    if (std::abs(lc.gap[j].mean) > std::abs(lc.gap[j - 1].mean) + slack) lc.monotone = false;
  }
  lc.final_within = k > 0 && std::abs(lc.gap.back().mean) <= 3.0 * lc.gap.back().se;
  return lc;
}

TheoremCheckResult check_lemma_exp_bound(const std::function<double(double, double)>& f,
                                         const std::function<LemmaSample(Rng&)>& sampler,
                                         std::size_t n, std::uint64_t seed) {
  if (n < 2) throw ConfigError("lemma check needs n >= 2");
  Vector z(n), fv(n);
  {
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t c) {
      Rng rng(mix_seed(seed, c));
      const std::size_t end = std::min(n, (c + 1) * kChunk);
      for (std::size_t j = c * kChunk; j < end; ++j) {
        const LemmaSample s = sampler(rng);
        z[j] = s.z;
        fv[j] = f(s.z, s.v);
      }
    });
  }
  // Shifted sums keep constant columns at exactly zero.
  const double z0 = z[0], f0 = fv[0];
  const double dn = static_cast<double>(n);
  double sz = 0.0, sf = 0.0, szf = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sz += z[j] - z0;
    sf += fv[j] - f0;
    szf += (z[j] - z0) * (fv[j] - f0);
  }
  const double mz = sz / dn, mf = sf / dn;
  const double cov = szf / dn - mz * mf;
  Moments u;
  for (std::size_t j = 0; j < n; ++j) u.add((z[j] - z0 - mz) * (fv[j] - f0 - mf));
  const Estimate e = u.estimate();

  TheoremCheckResult r;
  r.id = "lemmaD1";
  r.estimate = (szf / dn) + z0 * mf + f0 * mz + z0 * f0;  // E[Z f]
  r.bound = (mz + z0) * (mf + f0);                          // E[Z] E[f]
  r.se = e.se;
  r.samples = n;
  r.pass = cov <= 3.0 * e.se;
  r.detail = "covariance " + json(cov).dump();
  r.config = json{{"n", n}, {"seed", seed}}.dump();
  return r;
}

double loss_ig_l1(const LossSpec& spec, const Vector& w, const Vector& x, int y,
                  const Vector& delta) {
  require_same_dim(w.size(), x.size(), "loss IG");
  require_same_dim(w.size(), delta.size(), "loss IG delta");
  Vector v(w.size()), moved(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    v[i] = -y * w[i];
    moved[i] = x[i] + delta[i];
  }
  const auto a = ig_closed_form(v, 0.0, [&](double z) { return spec.g(z); }, moved, x);
  return l1_norm(a.values);
}

Theorem3Check check_theorem3_identity(const LossSpec& spec, const Vector& w, const Vector& x,
                                      int y, double epsilon) {
  require_same_dim(w.size(), x.size(), "stable-IG identity");
  Vector delta(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) delta[i] = -y * sign(w[i]) * epsilon;
  Theorem3Check c;
  c.lhs = spec.g(-y * dot(w, x)) + loss_ig_l1(spec, w, x, y, delta);
  c.rhs = spec.g(-y * dot(w, x) + epsilon * l1_norm(w));
  c.residual = std::abs(c.lhs - c.rhs);
  return c;
}

CornerSearch theorem3_corner_search(const LossSpec& spec, const Vector& w, const Vector& x, int y,
                                    double epsilon) {
  const std::size_t d = w.size();
  if (d > 16) throw ConfigError("corner search limited to d <= 16");
  CornerSearch cs;
  Vector star(d);
  for (std::size_t i = 0; i < d; ++i) star[i] = -y * sign(w[i]) * epsilon;
  cs.at_maximizer = loss_ig_l1(spec, w, x, y, star);
  cs.best = -1.0;
  cs.agrees = true;
  const double z0 = -y * dot(w, x);
  const double reach = epsilon * l1_norm(w);
  constexpr double u = std::numeric_limits<double>::epsilon();
  Vector delta(d);
  for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
    double t = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      delta[i] = (mask >> i & 1u) ? epsilon : -epsilon;
      t += -y * w[i] * delta[i];
    }
    const double v = loss_ig_l1(spec, w, x, y, delta);
    cs.best = std::max(cs.best, v);
    // The closed form divides a loss difference by the logit change t, so
    // its rounding error grows like (|g(z0)| + |g(z0+t)|) u / |t|.
    const double cond = t != 0.0 ? 8.0 * u * (std::abs(spec.g(z0)) + std::abs(spec.g(z0 + t))) *
                                       reach / std::abs(t)
                                 : 0.0;
    if (v > cs.at_maximizer + cond + 1e-12 * std::max(1.0, cs.at_maximizer)) cs.agrees = false;
  }
  return cs;
}

// ---------------------------------------------------------------------------
// Suites

namespace {

const LossSpec kLosses[] = {{LossKind::logistic}, {LossKind::hinge}, {LossKind::softplus_hinge}};

}  // namespace

std::vector<TheoremCheckResult> run_theorem1_zero_suite(std::size_t n, std::uint64_t seed) {
  FeatureSampler s;
  s.a = {1.0, 0.5, 0.2, 0.05, 0.0, -0.3, -1.0, 0.0};
  s.sd = {1.0, 0.8, 1.2, 0.5, 1.0, 0.7, 1.5, 0.3};
  std::vector<TheoremCheckResult> all;
  for (std::size_t k = 0; k < 3; ++k)
    for (auto& r : check_theorem1_zero(kLosses[k], 0.1, s, n, mix_seed(seed, k)))
      all.push_back(std::move(r));
  return all;
}

std::vector<TheoremCheckResult> run_theorem1_bound_suite(std::size_t configs, std::size_t n,
                                                         std::uint64_t seed) {
  std::vector<TheoremCheckResult> all;
  Rng rng(mix_seed(seed, 0xB0));
  for (std::size_t c = 0; c < configs; ++c) {
    const std::size_t d = 4 + rng.index(7);  // 4..10
    FeatureSampler s;
    s.a.resize(d);
    s.sd.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      s.a[i] = rng.normal(0.0, 0.5);
      s.sd[i] = rng.uniform(0.5, 1.5);
    }
    // Strict subset S of size 1..d-1; the complement is correlated half
    // of the time.
    std::vector<std::size_t> idx(d);
    for (std::size_t i = 0; i < d; ++i) idx[i] = i;
    rng.shuffle(idx.begin(), idx.end());
    const std::size_t size = 1 + rng.index(d - 1);
    WeightedAverageSpec ws;
    ws.S.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(size));
    std::sort(ws.S.begin(), ws.S.end());
    s.in_s.assign(d, false);
    for (std::size_t i : ws.S) s.in_s[i] = true;
    s.rho = rng.bernoulli(0.5) ? rng.uniform(0.3, 0.9) : 0.0;
    ws.w.resize(d);
    for (double& v : ws.w) v = rng.normal(0.0, 1.0);
    const double eps = rng.uniform(0.0, 0.5);
    const LossSpec& spec = kLosses[c % 3];
    const std::uint64_t cseed = mix_seed(seed, 1000 + c);

    auto r = check_theorem1_bound(spec, ws, eps, s, n, cseed);
    const LimitCheck lc = check_theorem1_limit(spec, ws, eps, s, n, cseed);
    json cfg = json::parse(r.config);
    json gaps = json::array();
    for (std::size_t j = 0; j < lc.scales.size(); ++j)
      gaps.push_back({{"scale", lc.scales[j]}, {"gap", lc.gap[j].mean}, {"se", lc.gap[j].se}});
    cfg["limit"] = gaps;
    r.config = cfg.dump();
    r.detail += lc.monotone ? "; limit monotone" : "; limit NOT monotone";
    r.detail += lc.final_within ? ", residual at last scale within 3 SE"
                                : ", residual at last scale outside 3 SE";
    r.pass = r.pass && lc.pass();
    all.push_back(std::move(r));
  }
  return all;
}

std::vector<TheoremCheckResult> run_theorem3_suite(std::size_t trials, std::uint64_t seed) {
  std::vector<TheoremCheckResult> all;
  for (std::size_t k = 0; k < 3; ++k) {
    Rng rng(mix_seed(seed, 0x73 + k));
    double worst = 0.0;
    std::size_t corner_fail = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t d = 1 + rng.index(8);
      Vector w(d), x(d);
      for (std::size_t i = 0; i < d; ++i) {
        w[i] = rng.bernoulli(0.15) ? 0.0 : rng.normal(0.0, 1.0);
        x[i] = rng.normal(0.0, 1.0);
      }
      const int y = rng.bernoulli(0.5) ? 1 : -1;
      const double eps = rng.bernoulli(0.05) ? 0.0 : rng.uniform(0.0, 0.5);
      worst = std::max(worst, check_theorem3_identity(kLosses[k], w, x, y, eps).residual);
      if (!theorem3_corner_search(kLosses[k], w, x, y, eps).agrees) ++corner_fail;
    }
    TheoremCheckResult r;
    r.id = "thm3";
    r.config = json{{"loss", kLosses[k].name()}, {"trials", trials}, {"seed", seed}}.dump();
    r.estimate = worst;
    r.bound = 1e-9;
    r.samples = trials;
    r.pass = worst <= 1e-9 && corner_fail == 0;
    r.detail = "max residual; corner-search disagreements " + std::to_string(corner_fail);
    all.push_back(std::move(r));
  }
  return all;
}

std::vector<TheoremCheckResult> run_lemma_suite(std::size_t constructions, std::size_t n,
                                                std::uint64_t seed) {
  std::vector<TheoremCheckResult> all;
  Rng rng(mix_seed(seed, 0xD1));
  for (std::size_t c = 0; c < constructions; ++c) {
    // (Z ⊥ V) | Y with E(Z|Y) = m; Z's spread may depend on Y.
    const double p = rng.uniform(0.2, 0.8);
    const double m = rng.normal(0.0, 1.0);
    const double s = rng.uniform(0.2, 2.0);
    const double c_y = rng.uniform(-0.5, 0.5);
    const double b = rng.normal(0.0, 1.0);
    // f non-increasing in z for every v.
    const double alpha = rng.uniform(0.0, 2.0);
    const double beta = rng.uniform(0.0, 1.0);
    const double gamma = rng.normal(0.0, 1.0);
    const double kappa = rng.uniform(0.2, 3.0);
    auto sampler = [=](Rng& r) {
      LemmaSample x;
      x.y = r.bernoulli(p) ? 1 : -1;
      x.z = m + s * (1.0 + c_y * x.y) * r.normal();
      x.v = b * x.y + r.normal();
      return x;
    };
    auto f = [=](double z, double v) {
      return -alpha * std::tanh(kappa * (z - m)) * (1.0 + v * v) - beta * z + gamma * std::sin(v);
    };
    auto r = check_lemma_exp_bound(f, sampler, n, mix_seed(seed, 2000 + c));
    r.config = json{{"p", p}, {"m", m}, {"s", s}, {"c_y", c_y}, {"b", b}, {"alpha", alpha},
                    {"beta", beta}, {"gamma", gamma}, {"kappa", kappa}, {"n", n}}.dump();
    all.push_back(std::move(r));
  }
  return all;
}

std::string theorem_report_json(const std::vector<TheoremCheckResult>& results) {
  json checks = json::array();
  bool all_pass = true;
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    checks.push_back({{"theorem", r.id},
                      {"configuration", json::parse(r.config.empty() ? "{}" : r.config)},
                      {"estimate", r.estimate},
                      {"bound", r.bound},
                      {"se", r.se},
                      {"samples", r.samples},
                      {"verdict", r.pass ? "pass" : "fail"},
                      {"detail", r.detail}});
  }
  return json{{"checks", checks}, {"all_pass", all_pass}}.dump(2) + "\n";
}

}  // namespace attrsparse
