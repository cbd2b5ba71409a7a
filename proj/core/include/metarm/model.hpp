#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace metarm {

enum class Activation { kTanh, kRelu };

struct LayerShape {
  int in = 0;
  int out = 0;
  bool operator==(const LayerShape&) const = default;
};

// Architecture of the feed-forward reward scorer. The input layer width is
// prompt_dim + response_dim and the output is a single scalar.
struct ModelSpec {
  int prompt_dim = 0;
  int response_dim = 0;
  std::vector<int> hidden_dims{64, 64};
  Activation activation = Activation::kTanh;
  std::uint64_t seed = 0;

  int input_dim() const { return prompt_dim + response_dim; }
  std::vector<LayerShape> layers() const;
  int param_count() const;
  void validate() const;  // throws ConfigError on non-positive widths
};

// Flat f64 parameter vector plus the layer shapes it was laid out for.
// Per layer: weights row-major [out][in], then biases [out].
struct ParamVector {
  std::vector<double> values;
  std::vector<LayerShape> layout;

  std::size_t size() const { return values.size(); }
  bool all_finite() const;
};

struct FeatureInput {
  std::vector<double> prompt;
  std::vector<double> response;
};

// Scalar reward scorer r(x, y) with analytic forward and reverse passes.
// All methods are pure functions of their arguments.
class RewardModel {
 public:
  explicit RewardModel(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  int param_count() const { return param_count_; }

  // Xavier-uniform weights driven by spec.seed, zero biases.
  ParamVector init_params() const;
  ParamVector zero_params() const;

  double score(const ParamVector& params, const FeatureInput& input) const;
  double score(const ParamVector& params, std::span<const double> prompt,
               std::span<const double> response) const;

  // d(score)/d(params), reverse mode.
  ParamVector score_grad(const ParamVector& params, const FeatureInput& input) const;

  // Forward pass that also adds weight * d(score)/d(params) into grad_inout.
  // Returns the score. Batch loss gradients are built on this.
  double accumulate_score_grad(const ParamVector& params, const FeatureInput& input,
                               double weight, std::vector<double>& grad_inout) const;
  double accumulate_score_grad(const ParamVector& params, std::span<const double> prompt,
                               std::span<const double> response, double weight,
                               std::vector<double>& grad_inout) const;

 private:
  void check_params(const ParamVector& params) const;
  void check_input(std::span<const double> prompt, std::span<const double> response) const;
  double run(const ParamVector& params, std::span<const double> prompt,
             std::span<const double> response, double weight,
             std::vector<double>* grad_inout) const;

  ModelSpec spec_;
  std::vector<LayerShape> layers_;
  int param_count_ = 0;
};

// Elementwise base + c * g. Layouts must match.
ParamVector axpy(const ParamVector& base, double c, const ParamVector& g);
double dot(const ParamVector& a, const ParamVector& b);
double l2_norm(const ParamVector& a);

}  // namespace metarm
