#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attrsparse/attribution.hpp"
#include "attrsparse/metrics.hpp"
#include "attrsparse/training.hpp"

namespace attrsparse {

struct CompareConfig {
  std::vector<double> epsilons{0.1};
  std::vector<double> lambdas{0.02};
  TrainConfig base;  // regime fields are overridden per model
  LossSpec loss;
  IgMethod method = IgMethod::closed;
  std::size_t ig_steps = 256;
  std::optional<Vector> baseline;  // default: zero vector
};

struct RegimeResult {
  std::string label;  // n, a(eps=...), l(lambda=...)
  std::string kind;   // natural, adversarial, l1
  double param = 0.0;
  double accuracy = 0.0;
  double mean_loss = 0.0;
  double mean_gini = 0.0;
  std::size_t nonzero_weights = 0;
};

struct ExperimentReport {
  std::string dataset_id;
  std::string version;
  CompareConfig config;
  std::size_t dim = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::uint64_t split_seed = 0;
  std::vector<RegimeResult> regimes;
  SparsenessComparison comparison;
  double runtime_seconds = 0.0;  // kept out of report_json (not reproducible)
};

/// Trains the n-model and one a-model per epsilon and one l-model per lambda
/// on the same training split, attributes the test split with IG on the
/// true-class probability, and compares mean Gini and accuracy.
ExperimentReport run_compare(const Dataset& ds, const std::string& dataset_id,
                             const CompareConfig& cfg);

/// Deterministic JSON (no timing).
std::string report_json(const ExperimentReport& r);
/// model,kind,param,accuracy,mean_gini: one row per trained model.
std::string sweep_csv(const ExperimentReport& r);

/// Two-class synthetic blob images with a one-hidden-layer MLP: natural,
/// PGD-adversarial and a sweep of l1 strengths, per seed.
struct BlobStudyConfig {
  BlobImageSpec images;
  std::size_t train_size = 1000;
  std::size_t test_size = 300;
  std::size_t hidden = 16;
  HiddenActivation activation = HiddenActivation::softplus;
  double epsilon = 0.1;
  std::vector<double> lambdas{3e-4, 1e-3, 3e-3, 1e-2, 3e-2};
  std::size_t epochs = 20;
  std::size_t ig_steps = 64;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  /// An l-model qualifies when its accuracy is within this of natural.
  double accuracy_slack = 0.02;
};

struct BlobSeedResult {
  std::uint64_t seed = 0;
  RegimeResult natural;
  RegimeResult adversarial;
  std::vector<RegimeResult> l1;
};

struct BlobStudy {
  std::vector<BlobSeedResult> seeds;
  double natural_gini = 0.0;      // averaged over seeds
  double adversarial_gini = 0.0;  // averaged over seeds
  double natural_accuracy = 0.0;
  double adversarial_accuracy = 0.0;
  /// Best seed-averaged l1 Gini among strengths whose seed-averaged
  /// accuracy is within the slack of natural; nullopt if none qualifies.
  std::optional<double> best_l1_gini;
  std::optional<double> best_l1_lambda;
  std::vector<double> l1_gini;      // seed-averaged, per lambda
  std::vector<double> l1_accuracy;  // seed-averaged, per lambda
};

BlobStudy run_blob_study(const BlobStudyConfig& cfg);
std::string blob_study_json(const BlobStudyConfig& cfg, const BlobStudy& s);

}  // namespace attrsparse
