#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attrsparse/adversarial.hpp"
#include "attrsparse/data.hpp"
#include "attrsparse/models.hpp"
#include "attrsparse/optimizer.hpp"

namespace attrsparse {

enum class Regime { natural, adversarial, l1, stable_ig };

std::string to_string(Regime r);
/// Throws ConfigError listing the valid names.
Regime parse_regime(const std::string& name);

struct TrainConfig {
  Regime regime = Regime::natural;
  double epsilon = 0.0;  // adversarial, stable-ig
  double lambda = 0.0;   // l1
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  bool fit_bias = false;
  /// MLP adversarial training: PGD steps (0 = floor(100 eps) + 10).
  std::size_t pgd_steps = 0;
  double pgd_step_size = 0.01;
  /// Keep PGD points inside [0, 1].
  bool clamp_unit = false;

  void validate() const;
};

/// JSON object with the field names above; unknown keys are rejected.
TrainConfig train_config_from_json(const std::string& text, TrainConfig base = {});
std::string train_config_to_json(const TrainConfig& cfg);

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;      // mean training objective over the epoch's batches
  double accuracy = 0.0;  // natural accuracy on the training split after the epoch
  double l1_norm = 0.0;
  double weight_gini = 0.0;
};

struct TrainTrace {
  std::vector<EpochStats> epochs;
};

/// epoch,loss,acc,l1_norm,weight_gini
std::string trace_csv(const TrainTrace& trace);

template <typename Model>
struct TrainResult {
  Model model;
  TrainTrace trace;
};

/// Mini-batch training of a linear sigmoid model on the training split.
/// Weights start at zero; batches are drawn from a seeded shuffle each
/// epoch. Adversarial batches are perturbed with the closed-form maximizer
/// recomputed from the current weights. l1 applies a soft-threshold after
/// every optimizer step. Throws DivergenceError (with the step index) on a
/// non-finite or exploding loss.
TrainResult<LinearModel> train(const Dataset& ds, const LossSpec& spec, const TrainConfig& cfg);

/// Minimizes the stable-IG risk: loss plus the worst-case l1 change of the
/// loss attribution inside the eps box, using its explicit maximizer
/// Delta_i = -y sign(w_i) eps. Requires regime stable_ig (or natural with
/// eps = 0).
TrainResult<LinearModel> train_stable_ig(const Dataset& ds, const LossSpec& spec,
                                         const TrainConfig& cfg);

/// Maximizer of the stable-IG regularizer for one example.
Vector stable_ig_maximizer(const LinearModel& model, int y, double epsilon);

/// MLP training from `init`; adversarial batches use PGD.
TrainResult<MlpModel> train_mlp(const Dataset& ds, const LossSpec& spec, const TrainConfig& cfg,
                                const MlpModel& init);

/// One binary head per class, each trained (and perturbed) independently.
TrainResult<OneVsAllModel> train_one_vs_all(const Dataset& ds, const LossSpec& spec,
                                            const TrainConfig& cfg);

struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

/// Threshold 0.5 on the predicted probability; exactly 0.5 predicts +1.
Evaluation evaluate(const LinearModel& model, const Dataset& ds, Split split,
                    const LossSpec& spec = LossSpec::logistic());
Evaluation evaluate(const MlpModel& model, const Dataset& ds, Split split,
                    const LossSpec& spec = LossSpec::logistic());
/// mean_loss is the mean over heads of the head losses.
Evaluation evaluate(const OneVsAllModel& model, const Dataset& ds, Split split,
                    const LossSpec& spec = LossSpec::logistic());

}  // namespace attrsparse
