#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attrsparse/common.hpp"
#include "attrsparse/data.hpp"
#include "attrsparse/losses.hpp"

namespace attrsparse {

enum class Activation { sigmoid, identity };

/// F(x) = A(<w,x> + b). The bias is absent by default and never takes part
/// in perturbation arithmetic.
struct LinearModel {
  Vector w;
  Activation activation = Activation::sigmoid;
  std::optional<double> bias;

  LinearModel() = default;
  explicit LinearModel(Vector weights, Activation a = Activation::sigmoid,
                       std::optional<double> b = std::nullopt)
      : w(std::move(weights)), activation(a), bias(b) {}

  std::size_t dim() const noexcept { return w.size(); }
  double bias_or_zero() const noexcept { return bias.value_or(0.0); }
  double logit(std::span<const double> x) const;
  double activate(double z) const;
  double predict(std::span<const double> x) const { return activate(logit(x)); }
  void validate() const;

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

/// g(-y(<w,x> + b)).
double loss(const LossSpec& spec, const LinearModel& model, std::span<const double> x, int y);
/// Gradient over w: -y g'(-y(<w,x>+b)) x.
Vector loss_gradient(const LossSpec& spec, const LinearModel& model, std::span<const double> x,
                     int y);
/// Derivative over the bias: -y g'(-y(<w,x>+b)).
double loss_gradient_bias(const LossSpec& spec, const LinearModel& model,
                          std::span<const double> x, int y);

enum class HiddenActivation { softplus, tanh, relu };

std::string to_string(HiddenActivation a);
HiddenActivation parse_hidden_activation(const std::string& name);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out

  std::size_t in() const noexcept { return weight.cols(); }
  std::size_t out() const noexcept { return weight.rows(); }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Fully connected network with a single logit output; predict() applies a
/// sigmoid. Layer sizes {d, 1} give a linear model with bias.
struct MlpModel {
  std::vector<DenseLayer> layers;
  HiddenActivation hidden = HiddenActivation::softplus;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
  static MlpModel init(const std::vector<std::size_t>& sizes, HiddenActivation hidden,
                       std::uint64_t seed);

  std::vector<std::size_t> sizes() const;
  std::size_t input_dim() const;
  std::size_t parameter_count() const;
  double logit(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return sigmoid(logit(x)); }
  void validate() const;

  /// Flat parameter order: per layer, weight row-major then bias.
  Vector flatten() const;
  void assign(std::span<const double> params);

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

struct MlpGradient {
  double loss = 0.0;
  Vector params;  // same order as MlpModel::flatten
  Vector input;
};

/// Reverse-mode gradients of g(-y * logit(x)).
MlpGradient mlp_loss_gradient(const LossSpec& spec, const MlpModel& model,
                              std::span<const double> x, int y);

/// d logit / dx, with the logit itself.
Vector mlp_logit_input_gradient(const MlpModel& model, std::span<const double> x,
                                double* logit_out = nullptr);

/// k >= 3 binary heads; head i separates class i from the rest.
struct OneVsAllModel {
  std::vector<LinearModel> heads;

  std::size_t num_classes() const noexcept { return heads.size(); }
  std::size_t dim() const;
  Vector scores(std::span<const double> x) const;
  /// argmax of head margins; the lowest index wins ties.
  std::size_t predict(std::span<const double> x) const;
  void validate() const;

  friend bool operator==(const OneVsAllModel&, const OneVsAllModel&) = default;
};

/// ±1 label of head `head` for an example of class `cls`.
inline int head_label(std::size_t head, std::size_t cls) { return head == cls ? 1 : -1; }

}  // namespace attrsparse
