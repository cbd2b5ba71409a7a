#include "metarm/synthetic_env.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

#include "metarm/errors.hpp"

namespace metarm {

namespace {

constexpr std::uint64_t kOracleStream = 0x4f7261636c655772ULL;
constexpr std::uint64_t kGainStream = 0x4f7261636c654761ULL;
constexpr std::uint64_t kPolicyStream = 0x506f6c6963794d6bULL;
constexpr std::uint64_t kPrefStream = 0x5072656653616d70ULL;
constexpr std::uint64_t kMetaStream = 0x4d65746153616d70ULL;
constexpr std::uint64_t kMetaPoolStream = 0x4d657461506f6f6cULL;
constexpr std::uint64_t kImproveStream = 0x496d70726f766550ULL;

void check_dims(int prompt_dim, int response_dim, const char* where) {
  if (prompt_dim < 1 || response_dim < 1) {
    throw ConfigError(std::string(where) + ": dimensions must be positive");
  }
}

}  // namespace

OracleReward OracleReward::make(Kind kind, int prompt_dim, int response_dim,
                                std::uint64_t seed) {
  check_dims(prompt_dim, response_dim, "OracleReward");
  OracleReward oracle;
  oracle.kind_ = kind;
  oracle.prompt_dim_ = prompt_dim;
  oracle.response_dim_ = response_dim;
  if (kind == Kind::kBilinear) {
    Rng rng(derive_seed(seed, kOracleStream));
    const double w_scale = 1.0 / std::sqrt(double(prompt_dim) * double(response_dim));
    const double v_scale = 1.0 / std::sqrt(double(response_dim));
    oracle.w_.resize(std::size_t(prompt_dim) * std::size_t(response_dim));
    for (double& w : oracle.w_) w = w_scale * rng.normal();
    oracle.v_.resize(std::size_t(response_dim));
    for (double& v : oracle.v_) v = v_scale * rng.normal();
    return oracle;
  }
  ModelSpec spec;
  spec.prompt_dim = prompt_dim;
  spec.response_dim = response_dim;
  spec.hidden_dims = {32, 32};
  spec.activation = Activation::kTanh;
  spec.seed = derive_seed(seed, kOracleStream);
  oracle.mlp_model_.emplace(spec);
  oracle.mlp_params_ = oracle.mlp_model_->init_params();
  // Rescale so oracle scores have roughly unit spread regardless of depth.
  Rng cal(derive_seed(seed, kGainStream));
  constexpr int kCalibrationDraws = 256;
  std::vector<double> x(std::size_t(prompt_dim), 0.0);
  std::vector<double> y(std::size_t(response_dim), 0.0);
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < kCalibrationDraws; ++i) {
    for (double& v : x) v = cal.normal();
    for (double& v : y) v = cal.normal();
    const double s = oracle.mlp_model_->score(oracle.mlp_params_, x, y);
    sum += s;
    sum_sq += s * s;
  }
  const double mean = sum / kCalibrationDraws;
  const double var = sum_sq / kCalibrationDraws - mean * mean;
  const double sd = std::sqrt(std::max(var, 0.0));
  oracle.gain_ = sd > 1e-12 ? 1.0 / sd : 1.0;
  return oracle;
}

double OracleReward::score(std::span<const double> prompt,
                           std::span<const double> response) const {
  if (int(prompt.size()) != prompt_dim_ || int(response.size()) != response_dim_) {
    throw ShapeError("OracleReward::score: input sizes do not match oracle dimensions");
  }
  if (kind_ == Kind::kMlp) {
    return gain_ * mlp_model_->score(mlp_params_, prompt, response);
  }
  double total = 0.0;
  for (int i = 0; i < prompt_dim_; ++i) {
    const double* row = w_.data() + std::size_t(i) * std::size_t(response_dim_);
    double acc = 0.0;
    for (int j = 0; j < response_dim_; ++j) acc += row[j] * response[std::size_t(j)];
    total += prompt[std::size_t(i)] * acc;
  }
  for (int j = 0; j < response_dim_; ++j) total += v_[std::size_t(j)] * response[std::size_t(j)];
  return total;
}

std::vector<double> AffineMap::apply(std::span<const double> x) const {
  if (int(x.size()) != in) {
    throw ShapeError("AffineMap::apply: input size does not match map");
  }
  std::vector<double> y(b.begin(), b.end());
  for (int j = 0; j < out; ++j) {
    const double* row = a.data() + std::size_t(j) * std::size_t(in);
    double acc = 0.0;
    for (int i = 0; i < in; ++i) acc += row[i] * x[std::size_t(i)];
    y[std::size_t(j)] += acc;
  }
  return y;
}

GaussianPolicy GaussianPolicy::make(int prompt_dim, int response_dim, double sigma,
                                    double init_scale, std::uint64_t seed) {
  check_dims(prompt_dim, response_dim, "GaussianPolicy");
  if (sigma <= 0.0) throw ConfigError("GaussianPolicy: sigma must be positive");
  GaussianPolicy policy;
  policy.mean_map.in = prompt_dim;
  policy.mean_map.out = response_dim;
  policy.mean_map.a.assign(std::size_t(prompt_dim) * std::size_t(response_dim), 0.0);
  policy.mean_map.b.assign(std::size_t(response_dim), 0.0);
  if (init_scale != 0.0) {
    Rng rng(derive_seed(seed, kPolicyStream));
    const double scale = init_scale / std::sqrt(double(prompt_dim));
    for (double& w : policy.mean_map.a) w = scale * rng.normal();
  }
  policy.sigma = sigma;
  policy.round = 0;
  return policy;
}

std::vector<double> GaussianPolicy::sample_response(std::span<const double> prompt,
                                                    Rng& rng) const {
  std::vector<double> y = mean_map.apply(prompt);
  for (double& v : y) v += sigma * rng.normal();
  return y;
}

void EnvConfig::validate() const {
  check_dims(prompt_dim, response_dim, "EnvConfig");
  if (!prompts.mean.empty() && int(prompts.mean.size()) != prompt_dim) {
    throw ConfigError("EnvConfig: prompt mean size does not match prompt_dim");
  }
  if (prompts.sigma < 0.0) throw ConfigError("EnvConfig: prompt sigma must be non-negative");
  if (beta <= 0.0) throw ConfigError("EnvConfig: beta must be positive");
  if (ood) {
    if (!ood->mean.empty() && int(ood->mean.size()) != prompt_dim) {
      throw ConfigError("EnvConfig: ood mean size does not match prompt_dim");
    }
    if (ood->sigma < 0.0) throw ConfigError("EnvConfig: ood sigma must be non-negative");
  }
}

std::vector<double> EnvConfig::sample_prompt(Rng& rng) const {
  // An empty mean reads as the origin.
  std::vector<double> x(std::size_t(prompt_dim), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double mean = i < prompts.mean.size() ? prompts.mean[i] : 0.0;
    x[i] = mean + prompts.sigma * rng.normal();
  }
  return x;
}

std::vector<PreferencePair> sample_preferences(const EnvConfig& env, const OracleReward& oracle,
                                               const GaussianPolicy& policy, int count,
                                               std::uint64_t stream) {
  env.validate();
  if (count < 1) throw DataError("sample_preferences: count must be positive");
  if (oracle.prompt_dim() != env.prompt_dim || oracle.response_dim() != env.response_dim) {
    throw ShapeError("sample_preferences: oracle dimensions do not match env");
  }
  if (policy.mean_map.in != env.prompt_dim || policy.mean_map.out != env.response_dim) {
    throw ShapeError("sample_preferences: policy dimensions do not match env");
  }
  Rng rng(derive_seed(env.seed, kPrefStream, stream));
  std::vector<PreferencePair> pairs;
  pairs.reserve(std::size_t(count));
  for (int i = 0; i < count; ++i) {
    std::vector<double> prompt = env.sample_prompt(rng);
    std::vector<double> y1 = policy.sample_response(prompt, rng);
    std::vector<double> y2 = policy.sample_response(prompt, rng);
    const double r1 = oracle.score(prompt, y1);
    const double r2 = oracle.score(prompt, y2);
    bool first_wins;
    if (env.label_mode == LabelMode::kBernoulliBt) {
      first_wins = rng.uniform01() < sigmoid(env.beta * (r1 - r2));
    } else {
      first_wins = r1 >= r2;
    }
    PreferencePair pair;
    pair.prompt = std::move(prompt);
    if (first_wins) {
      pair.winner = std::move(y1);
      pair.loser = std::move(y2);
    } else {
      pair.winner = std::move(y2);
      pair.loser = std::move(y1);
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

namespace {

std::vector<MetaSample> draw_meta(const EnvConfig& env, const GaussianPolicy& policy,
                                  std::span<const std::vector<double>> pool, int count, int k,
                                  Rng& rng) {
  std::vector<MetaSample> samples;
  samples.reserve(std::size_t(count));
  for (int i = 0; i < count; ++i) {
    MetaSample sample;
    sample.prompt = pool.empty() ? env.sample_prompt(rng) : pool[rng.index(pool.size())];
    sample.responses.reserve(std::size_t(k));
    for (int j = 0; j < k; ++j) {
      sample.responses.push_back(policy.sample_response(sample.prompt, rng));
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

}  // namespace

std::vector<MetaSample> sample_meta(const EnvConfig& env, const GaussianPolicy& policy,
                                    int count, int k, std::uint64_t stream) {
  env.validate();
  if (count < 1) throw DataError("sample_meta: count must be positive");
  if (k < 2) throw DataError("sample_meta: k must be at least 2");
  if (policy.mean_map.in != env.prompt_dim || policy.mean_map.out != env.response_dim) {
    throw ShapeError("sample_meta: policy dimensions do not match env");
  }
  Rng rng(derive_seed(env.seed, kMetaStream, stream));
  return draw_meta(env, policy, {}, count, k, rng);
}

std::vector<MetaSample> sample_meta_with_prompts(const EnvConfig& env,
                                                 const GaussianPolicy& policy,
                                                 std::span<const std::vector<double>> prompts,
                                                 int count, int k, std::uint64_t stream) {
  env.validate();
  if (count < 1) throw DataError("sample_meta_with_prompts: count must be positive");
  if (k < 2) throw DataError("sample_meta_with_prompts: k must be at least 2");
  if (prompts.empty()) throw DataError("sample_meta_with_prompts: prompt pool is empty");
  for (const auto& prompt : prompts) {
    if (int(prompt.size()) != env.prompt_dim) {
      throw ShapeError("sample_meta_with_prompts: pooled prompt size does not match env");
    }
  }
  Rng rng(derive_seed(env.seed, kMetaPoolStream, stream));
  return draw_meta(env, policy, prompts, count, k, rng);
}

void ImproveConfig::validate() const {
  if (k < 2) throw ConfigError("ImproveConfig: k must be at least 2");
  if (step_size <= 0.0 || step_size > 1.0) {
    throw ConfigError("ImproveConfig: step_size must be in (0, 1]");
  }
  if (contraction <= 0.0 || contraction > 1.0) {
    throw ConfigError("ImproveConfig: contraction must be in (0, 1]");
  }
  if (prompt_batch < 2) throw ConfigError("ImproveConfig: prompt_batch must be at least 2");
}

namespace {

// Cholesky solve of the normal equations M theta = c, one column at a time.
// M is n x n symmetric positive definite when the prompt design has full rank.
void cholesky_solve_in_place(std::vector<double>& m, std::vector<double>& rhs, int n, int cols) {
  for (int j = 0; j < n; ++j) {
    double pivot = m[std::size_t(j) * n + j];
    for (int t = 0; t < j; ++t) {
      const double l = m[std::size_t(j) * n + t];
      pivot -= l * l;
    }
    if (!(pivot > 1e-10)) {
      throw DataError(
          "improve_policy: prompt design is rank-deficient; "
          "increase prompt_batch or prompt spread");
    }
    pivot = std::sqrt(pivot);
    m[std::size_t(j) * n + j] = pivot;
    for (int i = j + 1; i < n; ++i) {
      double acc = m[std::size_t(i) * n + j];
      for (int t = 0; t < j; ++t) {
        acc -= m[std::size_t(i) * n + t] * m[std::size_t(j) * n + t];
      }
      m[std::size_t(i) * n + j] = acc / pivot;
    }
  }
  for (int c = 0; c < cols; ++c) {
    double* col = rhs.data() + std::size_t(c) * n;
    for (int i = 0; i < n; ++i) {
      double acc = col[i];
      for (int t = 0; t < i; ++t) acc -= m[std::size_t(i) * n + t] * col[t];
      col[i] = acc / m[std::size_t(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
      double acc = col[i];
      for (int t = i + 1; t < n; ++t) acc -= m[std::size_t(t) * n + i] * col[t];
      col[i] = acc / m[std::size_t(i) * n + i];
    }
  }
}

}  // namespace

GaussianPolicy improve_policy(const GaussianPolicy& policy, const RewardModel& model,
                              const ParamVector& rm_params, const EnvConfig& env,
                              const ImproveConfig& cfg, std::uint64_t stream) {
  env.validate();
  cfg.validate();
  if (policy.mean_map.in != env.prompt_dim || policy.mean_map.out != env.response_dim) {
    throw ShapeError("improve_policy: policy dimensions do not match env");
  }
  Rng rng(derive_seed(env.seed, kImproveStream, stream));
  const int p = env.prompt_dim;
  const int r = env.response_dim;
  const int n = p + 1;  // affine fit: weights plus intercept
  std::vector<double> gram(std::size_t(n) * n, 0.0);
  std::vector<double> rhs(std::size_t(r) * n, 0.0);  // column-major per response dim
  std::vector<double> xt(std::size_t(n), 0.0);
  for (int b = 0; b < cfg.prompt_batch; ++b) {
    std::vector<double> prompt = env.sample_prompt(rng);
    std::vector<double> best;
    double best_score = 0.0;
    for (int j = 0; j < cfg.k; ++j) {
      std::vector<double> y = policy.sample_response(prompt, rng);
      const double s = model.score(rm_params, prompt, y);
      if (j == 0 || s > best_score) {
        best_score = s;
        best = std::move(y);
      }
    }
    for (int i = 0; i < p; ++i) xt[std::size_t(i)] = prompt[std::size_t(i)];
    xt[std::size_t(p)] = 1.0;
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t <= i; ++t) gram[std::size_t(i) * n + t] += xt[std::size_t(i)] * xt[std::size_t(t)];
      for (int c = 0; c < r; ++c) rhs[std::size_t(c) * n + i] += xt[std::size_t(i)] * best[std::size_t(c)];
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int t = i + 1; t < n; ++t) gram[std::size_t(i) * n + t] = gram[std::size_t(t) * n + i];
  }
  cholesky_solve_in_place(gram, rhs, n, r);

  GaussianPolicy next = policy;
  const double s = cfg.step_size;
  for (int c = 0; c < r; ++c) {
    const double* theta = rhs.data() + std::size_t(c) * n;
    for (int i = 0; i < p; ++i) {
      double& a = next.mean_map.a[std::size_t(c) * p + i];
      a = (1.0 - s) * a + s * theta[i];
    }
    double& bias = next.mean_map.b[std::size_t(c)];
    bias = (1.0 - s) * bias + s * theta[p];
  }
  next.sigma = policy.sigma * cfg.contraction;
  next.round = policy.round + 1;
  return next;
}

EnvConfig ood_shift(const EnvConfig& env) {
  env.validate();
  if (!env.ood) throw ConfigError("ood_shift: env has no ood prompt distribution");
  EnvConfig shifted = env;
  shifted.prompts = *env.ood;
  return shifted;
}

}  // namespace metarm
