#include "attrsparse/models.hpp"

#include <algorithm>
#include <cmath>

#include "attrsparse/rng.hpp"

namespace attrsparse {

double LinearModel::logit(std::span<const double> x) const {
  require_same_dim(x.size(), w.size(), "linear model input");
  return dot(w, x) + bias_or_zero();
}

double LinearModel::activate(double z) const {
  return activation == Activation::sigmoid ? sigmoid(z) : z;
}

void LinearModel::validate() const {
  if (w.empty()) throw DimensionError("linear model has no weights");
  if (!all_finite(w) || (bias && !std::isfinite(*bias)))
    throw DataError("linear model has non-finite parameters");
}

double loss(const LossSpec& spec, const LinearModel& model, std::span<const double> x, int y) {
  return spec.g(-y * model.logit(x));
}

Vector loss_gradient(const LossSpec& spec, const LinearModel& model, std::span<const double> x,
                     int y) {
  const double c = -y * spec.gprime(-y * model.logit(x));
  Vector grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) grad[i] = c * x[i];
  return grad;
}

double loss_gradient_bias(const LossSpec& spec, const LinearModel& model,
                          std::span<const double> x, int y) {
  return -y * spec.gprime(-y * model.logit(x));
}

// ---------------------------------------------------------------------------
// MLP

std::string to_string(HiddenActivation a) {
  switch (a) {
    case HiddenActivation::softplus: return "softplus";
    case HiddenActivation::tanh: return "tanh";
    case HiddenActivation::relu: return "relu";
  }
  return "?";
}

HiddenActivation parse_hidden_activation(const std::string& name) {
  if (name == "softplus") return HiddenActivation::softplus;
  if (name == "tanh") return HiddenActivation::tanh;
  if (name == "relu") return HiddenActivation::relu;
  throw ConfigError("unknown hidden activation '" + name + "' (valid: softplus, tanh, relu)");
}

namespace {

double act(HiddenActivation a, double z) {
  switch (a) {
    case HiddenActivation::softplus: return softplus(z);
    case HiddenActivation::tanh: return std::tanh(z);
    case HiddenActivation::relu: return z > 0.0 ? z : 0.0;
  }
  return z;
}

// Derivative in terms of the pre-activation.
double act_prime(HiddenActivation a, double z) {
  switch (a) {
    case HiddenActivation::softplus: return sigmoid(z);
    case HiddenActivation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case HiddenActivation::relu: return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

// Pre-activations per layer; activations[0] is the input.
struct Forward {
  std::vector<Vector> pre;
  std::vector<Vector> post;
};

Forward forward(const MlpModel& m, std::span<const double> x) {
  require_same_dim(x.size(), m.input_dim(), "mlp input");
  Forward f;
  f.post.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& layer = m.layers[l];
    const Vector& in = f.post.back();
    Vector z(layer.out());
    for (std::size_t o = 0; o < layer.out(); ++o) z[o] = dot(layer.weight.row(o), in) + layer.bias[o];
    Vector a(z.size());
    const bool last = l + 1 == m.layers.size();
    for (std::size_t o = 0; o < z.size(); ++o) a[o] = last ? z[o] : act(m.hidden, z[o]);
    f.pre.push_back(std::move(z));
    f.post.push_back(std::move(a));
  }
  return f;
}

// Backpropagates d(out)/d(logit) = seed; fills parameter and input grads.
void backward(const MlpModel& m, const Forward& f, double seed, Vector* params, Vector& input) {
  Vector delta{seed};  // d out / d pre-activation of the current layer
  std::vector<std::size_t> offsets(m.layers.size());
  std::size_t off = 0;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    offsets[l] = off;
    off += m.layers[l].out() * (m.layers[l].in() + 1);
  }
  if (params) params->assign(off, 0.0);
  for (std::size_t l = m.layers.size(); l-- > 0;) {
    const auto& layer = m.layers[l];
    const Vector& in = f.post[l];
    if (params) {
      double* g = params->data() + offsets[l];
      for (std::size_t o = 0; o < layer.out(); ++o)
        for (std::size_t i = 0; i < layer.in(); ++i) g[o * layer.in() + i] = delta[o] * in[i];
      double* gb = g + layer.out() * layer.in();
      for (std::size_t o = 0; o < layer.out(); ++o) gb[o] = delta[o];
    }
    Vector back(layer.in(), 0.0);
    for (std::size_t o = 0; o < layer.out(); ++o) {
      const auto row = layer.weight.row(o);
      for (std::size_t i = 0; i < layer.in(); ++i) back[i] += row[i] * delta[o];
    }
    if (l > 0) {
      const Vector& z = f.pre[l - 1];
      for (std::size_t i = 0; i < back.size(); ++i) back[i] *= act_prime(m.hidden, z[i]);
    }
    delta = std::move(back);
  }
  input = std::move(delta);
}

}  // namespace

MlpModel MlpModel::init(const std::vector<std::size_t>& sizes, HiddenActivation hidden,
                        std::uint64_t seed) {
  if (sizes.size() < 2) throw ConfigError("mlp needs at least input and output sizes");
  if (sizes.back() != 1) throw ConfigError("mlp output layer must have size 1");
  MlpModel m;
  m.hidden = hidden;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] == 0) throw ConfigError("mlp layer size must be >= 1");
    DenseLayer layer{Matrix(sizes[l + 1], sizes[l]), Vector(sizes[l + 1])};
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    for (double& v : layer.weight.data()) v = rng.uniform(-bound, bound);
    for (double& v : layer.bias) v = rng.uniform(-bound, bound);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

std::vector<std::size_t> MlpModel::sizes() const {
  std::vector<std::size_t> s;
  if (layers.empty()) return s;
  s.push_back(layers.front().in());
  for (const auto& l : layers) s.push_back(l.out());
  return s;
}

std::size_t MlpModel::input_dim() const { return layers.empty() ? 0 : layers.front().in(); }

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.out() * (l.in() + 1);
  return n;
}

double MlpModel::logit(std::span<const double> x) const { return forward(*this, x).post.back()[0]; }

void MlpModel::validate() const {
  if (layers.empty()) throw DimensionError("mlp has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].bias.size() != layers[l].out())
      throw DimensionError("mlp layer " + std::to_string(l) + ": bias size mismatch");
    if (l > 0 && layers[l].in() != layers[l - 1].out())
      throw DimensionError("mlp layer " + std::to_string(l) + ": input size mismatch");
    if (!all_finite(layers[l].weight.data()) || !all_finite(layers[l].bias))
      throw DataError("mlp has non-finite parameters");
  }
  if (layers.back().out() != 1) throw DimensionError("mlp output must be a single logit");
}

Vector MlpModel::flatten() const {
  Vector p;
  p.reserve(parameter_count());
  for (const auto& l : layers) {
    p.insert(p.end(), l.weight.data().begin(), l.weight.data().end());
    p.insert(p.end(), l.bias.begin(), l.bias.end());
  }
  return p;
}

void MlpModel::assign(std::span<const double> params) {
  require_same_dim(params.size(), parameter_count(), "mlp parameters");
  std::size_t k = 0;
  for (auto& l : layers) {
    for (double& v : l.weight.data()) v = params[k++];
    for (double& v : l.bias) v = params[k++];
  }
}

MlpGradient mlp_loss_gradient(const LossSpec& spec, const MlpModel& model,
                              std::span<const double> x, int y) {
  const Forward f = forward(model, x);
  const double z = -y * f.post.back()[0];
  MlpGradient g;
  g.loss = spec.g(z);
  backward(model, f, -y * spec.gprime(z), &g.params, g.input);
  return g;
}

Vector mlp_logit_input_gradient(const MlpModel& model, std::span<const double> x,
                                double* logit_out) {
  const Forward f = forward(model, x);
  if (logit_out) *logit_out = f.post.back()[0];
  Vector input;
  backward(model, f, 1.0, nullptr, input);
  return input;
}

// ---------------------------------------------------------------------------
// One-vs-all

std::size_t OneVsAllModel::dim() const { return heads.empty() ? 0 : heads.front().dim(); }

void OneVsAllModel::validate() const {
  if (heads.size() < 3) throw ConfigError("one-vs-all needs k >= 3 heads");
  for (const auto& h : heads) {
    require_same_dim(h.dim(), dim(), "one-vs-all head");
    h.validate();
  }
}

Vector OneVsAllModel::scores(std::span<const double> x) const {
  Vector s(heads.size());
  for (std::size_t k = 0; k < heads.size(); ++k) s[k] = heads[k].logit(x);
  return s;
}

std::size_t OneVsAllModel::predict(std::span<const double> x) const {
  const Vector s = scores(x);
  return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
}

}  // namespace attrsparse
