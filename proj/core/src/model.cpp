#include "metarm/model.hpp"

#include <cmath>
#include <string>

#include "metarm/errors.hpp"
#include "metarm/rng.hpp"

namespace metarm {

namespace {
constexpr std::uint64_t kInitStream = 0x4d6f64656c496e69ULL;
}

std::vector<LayerShape> ModelSpec::layers() const {
  std::vector<LayerShape> shapes;
  int width = input_dim();
  for (int h : hidden_dims) {
    shapes.push_back({width, h});
    width = h;
  }
  shapes.push_back({width, 1});
  return shapes;
}

int ModelSpec::param_count() const {
  int count = 0;
  for (const LayerShape& l : layers()) count += l.out * l.in + l.out;
  return count;
}

void ModelSpec::validate() const {
  if (prompt_dim < 1) throw ConfigError("model: prompt_dim must be positive");
  if (response_dim < 1) throw ConfigError("model: response_dim must be positive");
  for (int h : hidden_dims) {
    if (h < 1) throw ConfigError("model: hidden layer width must be positive");
  }
}

bool ParamVector::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

RewardModel::RewardModel(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  layers_ = spec_.layers();
  param_count_ = spec_.param_count();
}

ParamVector RewardModel::init_params() const {
  ParamVector p;
  p.layout = layers_;
  p.values.reserve(static_cast<std::size_t>(param_count_));
  Rng rng(derive_seed(spec_.seed, kInitStream));
  for (const LayerShape& l : layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    for (int i = 0; i < l.out * l.in; ++i) p.values.push_back(rng.uniform(-limit, limit));
    for (int i = 0; i < l.out; ++i) p.values.push_back(0.0);
  }
  return p;
}

ParamVector RewardModel::zero_params() const {
  ParamVector p;
  p.layout = layers_;
  p.values.assign(static_cast<std::size_t>(param_count_), 0.0);
  return p;
}

void RewardModel::check_params(const ParamVector& params) const {
  if (params.values.size() != static_cast<std::size_t>(param_count_)) {
    throw ShapeError("model: parameter vector has " + std::to_string(params.values.size()) +
                     " values, spec needs " + std::to_string(param_count_));
  }
}

void RewardModel::check_input(std::span<const double> prompt,
                              std::span<const double> response) const {
  if (prompt.size() != static_cast<std::size_t>(spec_.prompt_dim) ||
      response.size() != static_cast<std::size_t>(spec_.response_dim)) {
    throw ShapeError("model: input dims (" + std::to_string(prompt.size()) + ", " +
                     std::to_string(response.size()) + ") do not match spec (" +
                     std::to_string(spec_.prompt_dim) + ", " +
                     std::to_string(spec_.response_dim) + ")");
  }
}

double RewardModel::score(const ParamVector& params, const FeatureInput& input) const {
  return run(params, input.prompt, input.response, 0.0, nullptr);
}

double RewardModel::score(const ParamVector& params, std::span<const double> prompt,
                          std::span<const double> response) const {
  return run(params, prompt, response, 0.0, nullptr);
}

ParamVector RewardModel::score_grad(const ParamVector& params, const FeatureInput& input) const {
  ParamVector g = zero_params();
  run(params, input.prompt, input.response, 1.0, &g.values);
  return g;
}

double RewardModel::accumulate_score_grad(const ParamVector& params, const FeatureInput& input,
                                          double weight, std::vector<double>& grad_inout) const {
  return accumulate_score_grad(params, input.prompt, input.response, weight, grad_inout);
}

double RewardModel::accumulate_score_grad(const ParamVector& params,
                                          std::span<const double> prompt,
                                          std::span<const double> response, double weight,
                                          std::vector<double>& grad_inout) const {
  if (grad_inout.size() != static_cast<std::size_t>(param_count_)) {
    throw ShapeError("model: gradient buffer size mismatch");
  }
  return run(params, prompt, response, weight, &grad_inout);
}

double RewardModel::run(const ParamVector& params, std::span<const double> prompt,
                        std::span<const double> response, double weight,
                        std::vector<double>* grad_inout) const {
  check_params(params);
  check_input(prompt, response);

  const bool tanh_act = spec_.activation == Activation::kTanh;
  const std::size_t n_layers = layers_.size();

  // activations[0] is the concatenated input, activations[l+1] the output of
  // layer l (post-activation for hidden layers, linear for the last).
  std::vector<std::vector<double>> activations(n_layers + 1);
  activations[0].reserve(prompt.size() + response.size());
  activations[0].insert(activations[0].end(), prompt.begin(), prompt.end());
  activations[0].insert(activations[0].end(), response.begin(), response.end());

  std::size_t offset = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const LayerShape& shape = layers_[l];
    const std::vector<double>& z = activations[l];
    std::vector<double>& out = activations[l + 1];
    out.assign(static_cast<std::size_t>(shape.out), 0.0);
    const double* w = params.values.data() + offset;
    const double* b = w + static_cast<std::size_t>(shape.out) * shape.in;
    for (int o = 0; o < shape.out; ++o) {
      double acc = b[o];
      const double* row = w + static_cast<std::size_t>(o) * shape.in;
      for (int i = 0; i < shape.in; ++i) acc += row[i] * z[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(o)] = acc;
    }
    if (l + 1 < n_layers) {
      for (double& v : out) v = tanh_act ? std::tanh(v) : (v > 0.0 ? v : 0.0);
    }
    offset += static_cast<std::size_t>(shape.out) * shape.in + shape.out;
  }

  const double reward = activations[n_layers][0];
  if (grad_inout == nullptr || weight == 0.0) return reward;

  // Reverse pass. delta holds d(weight*score)/d(pre-activation of layer l).
  std::vector<double> delta{weight};
  for (std::size_t l = n_layers; l-- > 0;) {
    const LayerShape& shape = layers_[l];
    offset -= static_cast<std::size_t>(shape.out) * shape.in + shape.out;
    const double* w = params.values.data() + offset;
    double* gw = grad_inout->data() + offset;
    double* gb = gw + static_cast<std::size_t>(shape.out) * shape.in;
    const std::vector<double>& z = activations[l];

    std::vector<double> prev_delta;
    if (l > 0) prev_delta.assign(z.size(), 0.0);
    for (int o = 0; o < shape.out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      if (d == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(o) * shape.in;
      double* grow = gw + static_cast<std::size_t>(o) * shape.in;
      for (int i = 0; i < shape.in; ++i) {
        grow[i] += d * z[static_cast<std::size_t>(i)];
        if (l > 0) prev_delta[static_cast<std::size_t>(i)] += d * row[i];
      }
      gb[o] += d;
    }
    if (l > 0) {
      // Map d/d(post-activation) to d/d(pre-activation) of the layer below.
      const std::vector<double>& a = activations[l];
      for (std::size_t i = 0; i < prev_delta.size(); ++i) {
        if (tanh_act) {
          prev_delta[i] *= 1.0 - a[i] * a[i];
        } else {
          prev_delta[i] *= a[i] > 0.0 ? 1.0 : 0.0;
        }
      }
      delta = std::move(prev_delta);
    }
  }
  return reward;
}

ParamVector axpy(const ParamVector& base, double c, const ParamVector& g) {
  if (base.values.size() != g.values.size()) throw ShapeError("axpy: size mismatch");
  ParamVector out = base;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += c * g.values[i];
  return out;
}

double dot(const ParamVector& a, const ParamVector& b) {
  if (a.values.size() != b.values.size()) throw ShapeError("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) acc += a.values[i] * b.values[i];
  return acc;
}

double l2_norm(const ParamVector& a) { return std::sqrt(dot(a, a)); }

}  // namespace metarm
