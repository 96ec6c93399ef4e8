#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "attrsparse/losses.hpp"
#include "attrsparse/models.hpp"
#include "attrsparse/rng.hpp"

namespace attrsparse {

/// Draws (x, y) with P(y=+1) = class_balance and x_i = a_i y + sd_i n_i.
/// Coordinates in S are mutually independent given y. Coordinates outside
/// S (when `in_s` is non-empty) share a common Gaussian factor with
/// correlation rho, so they are dependent on each other but not on S.
struct FeatureSampler {
  Vector a;
  Vector sd;
  std::vector<bool> in_s;  // empty: every coordinate independent
  double rho = 0.0;
  double class_balance = 0.5;

  std::size_t dim() const noexcept { return a.size(); }
  void validate() const;
  int draw(Rng& rng, std::span<double> x) const;
};

/// Mean with its standard error.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

struct TheoremCheckResult {
  std::string id;
  std::string config;  // JSON object
  double estimate = 0.0;
  double bound = 0.0;  // theoretical value or bound
  double se = 0.0;
  bool pass = false;
  std::size_t samples = 0;
  std::string detail;
};

/// Samples per Monte-Carlo chunk; chunk c draws from mix_seed(seed, c) and
/// chunks are reduced in index order, so results do not depend on threads.
inline constexpr std::size_t kChunk = 4096;

/// E[g'(eps ||w||_1 - y<w,x>)].
Estimate estimate_gprimebar(const LossSpec& spec, const Vector& w, double epsilon,
                            const FeatureSampler& sampler, std::size_t n, std::uint64_t seed);

/// Per-coordinate mean of the unit-rate SGD update
/// Delta_i = g'(eps||w||_1 - y<w,x>) (y x_i - sign(w_i) eps).
std::vector<Estimate> expected_update(const LossSpec& spec, const Vector& w, double epsilon,
                                      const FeatureSampler& sampler, std::size_t n,
                                      std::uint64_t seed);

/// At w = 0: per coordinate, the paired difference Delta_i - g'(0) a_i has
/// mean zero; each coordinate passes when |mean| <= 3 SE.
std::vector<TheoremCheckResult> check_theorem1_zero(const LossSpec& spec, double epsilon,
                                                    const FeatureSampler& sampler, std::size_t n,
                                                    std::uint64_t seed);

struct WeightedAverageSpec {
  std::vector<std::size_t> S;
  Vector w;
  void validate() const;
  /// sum_S w_i q_i / sum_S |w_i|.
  double average(const Vector& q) const;
};

/// Bound check on the w-weighted average update over S. The estimate is the
/// per-sample paired statistic
///   Q = sum_S w_i Delta_i / sum_S |w_i| - g' (abar - eps),
/// whose mean is the gap between the average update and the bound; passes
/// when mean(Q) <= 3 SE. `estimate` is the average update, `bound` is
/// gbar' (abar - eps).
TheoremCheckResult check_theorem1_bound(const LossSpec& spec, const WeightedAverageSpec& ws,
                                        double epsilon, const FeatureSampler& sampler,
                                        std::size_t n, std::uint64_t seed);

struct LimitCheck {
  std::vector<double> scales;
  std::vector<Estimate> gap;  // mean(Q) at each scale
  bool monotone = false;      // |gap| non-increasing within 3 combined SE
  bool final_within = false;  // |gap| at the last scale <= 3 SE
  bool pass() const { return monotone && final_within; }
};

/// Scales w on S by each factor (complement fixed) with common random
/// numbers and tracks the gap to the bound. Scales must be >= 0; the default
/// ends at the limit point w_S = 0 itself, since a small positive scale leaves
/// an O(scale) residual that a large enough n resolves.
LimitCheck check_theorem1_limit(const LossSpec& spec, const WeightedAverageSpec& ws,
                                double epsilon, const FeatureSampler& sampler, std::size_t n,
                                std::uint64_t seed,
                                std::vector<double> scales = {1.0, 1e-1, 1e-2, 1e-3, 0.0});

struct LemmaSample {
  double z = 0.0;
  double v = 0.0;
  int y = 1;
};

/// Checks E[Z f(Z,V)] <= E[Z] E[f(Z,V)]: the sample covariance (computed in
/// shifted form, so a constant Z or f gives exactly 0) must be <= 3 SE.
TheoremCheckResult check_lemma_exp_bound(const std::function<double(double, double)>& f,
                                         const std::function<LemmaSample(Rng&)>& sampler,
                                         std::size_t n, std::uint64_t seed);

struct Theorem3Check {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

/// LHS = L(x,y;w) + ||IG^{L_y}(x, x + Delta*)||_1 with Delta*_i = -y sign(w_i)
/// eps and the loss attribution taken in closed form; RHS = g(eps||w||_1 -
/// y<w,x>).
Theorem3Check check_theorem3_identity(const LossSpec& spec, const Vector& w, const Vector& x,
                                      int y, double epsilon);

/// ||IG^{L_y}(x, x + delta)||_1 for an arbitrary delta.
double loss_ig_l1(const LossSpec& spec, const Vector& w, const Vector& x, int y,
                  const Vector& delta);

/// Max of loss_ig_l1 over the 2^d corners {±eps}^d (d <= 16). `agrees`
/// holds when no corner exceeds the value at Delta* by more than 1e-12
/// relative plus that corner's propagated rounding error (corners with a
/// tiny logit change are ill-conditioned and can tie with Delta*).
struct CornerSearch {
  double best = 0.0;
  double at_maximizer = 0.0;
  bool agrees = false;
};
CornerSearch theorem3_corner_search(const LossSpec& spec, const Vector& w, const Vector& x, int y,
                                    double epsilon);

// Randomized suites used by the CLI and the acceptance run.
std::vector<TheoremCheckResult> run_theorem1_zero_suite(std::size_t n, std::uint64_t seed);
std::vector<TheoremCheckResult> run_theorem1_bound_suite(std::size_t configs, std::size_t n,
                                                         std::uint64_t seed);
std::vector<TheoremCheckResult> run_theorem3_suite(std::size_t trials, std::uint64_t seed);
std::vector<TheoremCheckResult> run_lemma_suite(std::size_t constructions, std::size_t n,
                                                std::uint64_t seed);

/// {"checks": [...], "all_pass": bool}
std::string theorem_report_json(const std::vector<TheoremCheckResult>& results);

}  // namespace attrsparse
