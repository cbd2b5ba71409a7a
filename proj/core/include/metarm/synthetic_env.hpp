#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "metarm/model.hpp"
#include "metarm/objectives.hpp"
#include "metarm/rng.hpp"

namespace metarm {

// Hidden ground-truth scorer behind the preference labels. It reaches
// reward-model training only through the binary winner/loser ordering.
class OracleReward {
 public:
  enum class Kind { kBilinear, kMlp };

  static OracleReward make(Kind kind, int prompt_dim, int response_dim, std::uint64_t seed);

  double score(std::span<const double> prompt, std::span<const double> response) const;

  Kind kind() const { return kind_; }
  int prompt_dim() const { return prompt_dim_; }
  int response_dim() const { return response_dim_; }

 private:
  OracleReward() = default;

  Kind kind_ = Kind::kBilinear;
  int prompt_dim_ = 0;
  int response_dim_ = 0;
  // bilinear: x^T W y + v^T y.
  std::vector<double> w_;  // row-major prompt_dim x response_dim
  std::vector<double> v_;  // response_dim
  // mlp: a fixed random tanh network, output rescaled to unit spread.
  std::optional<RewardModel> mlp_model_;
  ParamVector mlp_params_;
  double gain_ = 1.0;
};

// Affine map from prompt space to response space: y = A x + b.
struct AffineMap {
  int in = 0;
  int out = 0;
  std::vector<double> a;  // row-major out x in
  std::vector<double> b;  // out

  std::vector<double> apply(std::span<const double> x) const;
};

// Response generator y ~ N(mean_map(x), sigma^2 I). Policy improvement
// drifts the mean and contracts sigma, shifting the response distribution
// the reward model sees.
struct GaussianPolicy {
  AffineMap mean_map;
  double sigma = 1.0;
  int round = 0;

  static GaussianPolicy make(int prompt_dim, int response_dim, double sigma,
                             double init_scale, std::uint64_t seed);

  std::vector<double> sample_response(std::span<const double> prompt, Rng& rng) const;
};

// Isotropic Gaussian over prompts.
struct PromptDistribution {
  std::vector<double> mean;
  double sigma = 1.0;
};

enum class LabelMode { kBernoulliBt, kDeterministic };

struct EnvConfig {
  int prompt_dim = 0;
  int response_dim = 0;
  PromptDistribution prompts;
  double beta = 5.0;  // label temperature
  LabelMode label_mode = LabelMode::kBernoulliBt;
  std::optional<PromptDistribution> ood;
  std::uint64_t seed = 0;

  void validate() const;
  std::vector<double> sample_prompt(Rng& rng) const;
};

// Draws (prompt, two policy responses) items and orders each as
// winner/loser. bernoulli_bt labels by a Bradley-Terry draw at temperature
// beta on the oracle reward gap; deterministic labels by the oracle argmax.
std::vector<PreferencePair> sample_preferences(const EnvConfig& env, const OracleReward& oracle,
                                               const GaussianPolicy& policy, int count,
                                               std::uint64_t stream = 0);

// Draws unlabeled (prompt, k responses) samples from the policy.
std::vector<MetaSample> sample_meta(const EnvConfig& env, const GaussianPolicy& policy,
                                    int count, int k, std::uint64_t stream = 0);

// As sample_meta, with prompts supplied by the caller instead of drawn from
// the env prompt distribution (sampled from the pool with replacement).
std::vector<MetaSample> sample_meta_with_prompts(const EnvConfig& env,
                                                 const GaussianPolicy& policy,
                                                 std::span<const std::vector<double>> prompts,
                                                 int count, int k, std::uint64_t stream = 0);

struct ImproveConfig {
  int k = 16;              // responses sampled per prompt
  double step_size = 0.5;  // interpolation toward the refit mean map, (0, 1]
  double contraction = 0.7;
  int prompt_batch = 256;

  void validate() const;
};

// Best-of-k selection against the scorer, least-squares refit of the mean
// map toward the selected responses, then variance contraction.
GaussianPolicy improve_policy(const GaussianPolicy& policy, const RewardModel& model,
                              const ParamVector& rm_params, const EnvConfig& env,
                              const ImproveConfig& cfg, std::uint64_t stream = 0);

// The same environment with prompts drawn from the alternate distribution.
EnvConfig ood_shift(const EnvConfig& env);

}  // namespace metarm
