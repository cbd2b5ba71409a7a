#include "metarm/meta_trainer.hpp"

#include <cmath>
#include <string>

#include "metarm/errors.hpp"
#include "metarm/rng.hpp"

namespace metarm {

namespace {
constexpr std::uint64_t kShuffleStream = 0x5472506173735368ULL;
constexpr std::uint64_t kMetaDrawStream = 0x54724d6574614472ULL;
}  // namespace

void TrainConfig::validate() const {
  if (eta < 0.0) throw ConfigError("train: eta must be >= 0");
  if (alpha <= 0.0) throw ConfigError("train: alpha must be > 0");
  if (pref_batch < 1) throw ConfigError("train: pref_batch must be >= 1");
  if (meta_batch < 1) throw ConfigError("train: meta_batch must be >= 1");
  if (steps < 0) throw ConfigError("train: steps must be >= 0");
  if (grad_clip <= 0.0) throw ConfigError("train: grad_clip must be > 0");
}

ParamVector meta_ascend(const RewardModel& model, const ParamVector& params,
                        std::span<const MetaSample> meta_batch, double eta,
                        const DiffLossOptions& opts) {
  if (eta == 0.0) return params;
  LossResult diff = difference_loss(model, params, meta_batch, opts);
  if (!diff.grad.all_finite()) {
    throw DivergenceError(-1, "difference gradient is not finite");
  }
  return axpy(params, eta, diff.grad);
}

MetaTrainer::MetaTrainer(const RewardModel& model, TrainMode mode, TrainConfig config)
    : model_(model), mode_(mode), config_(std::move(config)) {
  config_.validate();
  if (config_.optimizer == OuterOptimizer::kAdam) {
    adam_m_.assign(static_cast<std::size_t>(model_.param_count()), 0.0);
    adam_v_.assign(static_cast<std::size_t>(model_.param_count()), 0.0);
  }
}

StepResult MetaTrainer::step(const ParamVector& params,
                             std::span<const PreferencePair> pref_batch,
                             std::span<const MetaSample> meta_batch,
                             std::span<const PreferencePair> val) {
  if (pref_batch.empty()) throw DataError("step: empty preference batch");
  const int t = step_index_;
  const DiffLossOptions diff_opts{config_.exact_pair_mean};

  StepTrace trace;
  trace.step = t;

  // Diagnostics at the original parameters.
  LossResult vanilla_at_theta = vanilla_loss(model_, params, pref_batch);
  trace.vanilla_loss = vanilla_at_theta.loss;
  trace.grad_norm_vanilla = l2_norm(vanilla_at_theta.grad);

  ParamVector adapted = params;
  if (!meta_batch.empty()) {
    LossResult diff_at_theta = difference_loss(model_, params, meta_batch, diff_opts);
    trace.diff_value = diff_at_theta.loss;
    trace.grad_norm_diff = l2_norm(diff_at_theta.grad);
    trace.grad_dot = dot(vanilla_at_theta.grad, diff_at_theta.grad);
    if (mode_ == TrainMode::kMetarm && config_.eta != 0.0) {
      if (!diff_at_theta.grad.all_finite()) {
        throw DivergenceError(t, "difference gradient is not finite");
      }
      adapted = axpy(params, config_.eta, diff_at_theta.grad);
    }
    trace.diff_value_adapted = difference_value(model_, adapted, meta_batch, diff_opts);
  } else if (mode_ == TrainMode::kMetarm) {
    throw DataError("step: metarm mode needs a meta batch");
  }

  // Outer gradient: preference loss evaluated at the adapted parameters,
  // applied to the original ones.
  LossResult outer = vanilla_loss(model_, adapted, pref_batch);
  if (!outer.grad.all_finite()) {
    throw DivergenceError(t, "preference gradient is not finite");
  }
  double gnorm = l2_norm(outer.grad);
  if (gnorm > config_.grad_clip) {
    const double scale = config_.grad_clip / gnorm;
    for (double& g : outer.grad.values) g *= scale;
    trace.clipped = true;
  }

  StepResult result;
  if (config_.optimizer == OuterOptimizer::kSgd) {
    result.params = axpy(params, -config_.alpha, outer.grad);
  } else {
    result.params = params;
    const double b1 = config_.adam_beta1;
    const double b2 = config_.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, t + 1);
    const double bc2 = 1.0 - std::pow(b2, t + 1);
    for (std::size_t i = 0; i < result.params.values.size(); ++i) {
      const double g = outer.grad.values[i];
      adam_m_[i] = b1 * adam_m_[i] + (1.0 - b1) * g;
      adam_v_[i] = b2 * adam_v_[i] + (1.0 - b2) * g * g;
      const double mhat = adam_m_[i] / bc1;
      const double vhat = adam_v_[i] / bc2;
      result.params.values[i] -= config_.alpha * mhat / (std::sqrt(vhat) + config_.adam_eps);
    }
  }
  if (!result.params.all_finite()) {
    throw DivergenceError(t, "parameters are not finite after update");
  }

  trace.val_accuracy = rm_accuracy(model_, result.params, val.empty() ? pref_batch : val);
  step_index_ += 1;
  result.trace = trace;
  return result;
}

TrainResult train(const RewardModel& model, TrainMode mode,
                  std::span<const PreferencePair> pairs, std::span<const MetaSample> meta,
                  const TrainConfig& config, std::span<const PreferencePair> val) {
  return train_from(model, mode, model.init_params(), pairs, meta, config, val);
}

TrainResult train_from(const RewardModel& model, TrainMode mode, ParamVector init,
                       std::span<const PreferencePair> pairs, std::span<const MetaSample> meta,
                       const TrainConfig& config, std::span<const PreferencePair> val) {
  config.validate();
  if (init.size() != std::size_t(model.param_count()) || init.layout != model.spec().layers()) {
    throw ShapeError("train_from: initial parameters do not match the model");
  }
  if (pairs.empty()) throw DataError("train: empty preference dataset");
  if (mode == TrainMode::kMetarm && meta.empty()) {
    throw DataError("train: metarm mode needs a meta dataset");
  }

  const std::size_t n = pairs.size();
  const std::size_t batch = static_cast<std::size_t>(config.pref_batch);
  const std::size_t steps_per_epoch = (n + batch - 1) / batch;
  const int total_steps =
      config.steps > 0 ? config.steps : static_cast<int>(steps_per_epoch);

  Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
  Rng meta_rng(derive_seed(config.seed, kMetaDrawStream));

  MetaTrainer trainer(model, mode, config);
  TrainResult result;
  result.params = std::move(init);
  result.trace.reserve(static_cast<std::size_t>(total_steps));

  std::vector<std::size_t> order;
  std::vector<PreferencePair> pref_batch;
  std::vector<MetaSample> meta_batch;
  std::size_t cursor = 0;
  for (int t = 0; t < total_steps; ++t) {
    if (cursor == 0 || cursor >= n) {
      order = shuffle_rng.permutation(n);
      cursor = 0;
    }
    pref_batch.clear();
    const std::size_t take = std::min(batch, n - cursor);
    for (std::size_t i = 0; i < take; ++i) pref_batch.push_back(pairs[order[cursor + i]]);
    cursor += take;

    meta_batch.clear();
    if (!meta.empty()) {
      for (int i = 0; i < config.meta_batch; ++i) {
        meta_batch.push_back(meta[meta_rng.index(meta.size())]);
      }
    }

    StepResult step = trainer.step(result.params, pref_batch, meta_batch, val);
    result.params = std::move(step.params);
    result.trace.push_back(step.trace);
  }
  return result;
}

AlignmentProbeReport alignment_probe(const RewardModel& model, const ParamVector& params,
                                     std::span<const PreferencePair> pref_batch,
                                     std::span<const MetaSample> meta_batch,
                                     std::span<const double> etas,
                                     const DiffLossOptions& opts) {
  if (pref_batch.empty()) throw DataError("alignment probe: empty preference batch");
  if (meta_batch.empty()) throw DataError("alignment probe: empty meta batch");

  AlignmentProbeReport report;
  report.etas.assign(etas.begin(), etas.end());

  const LossResult diff = difference_loss(model, params, meta_batch, opts);

  // Per-pair losses and gradients at the base parameters.
  const std::size_t n = pref_batch.size();
  std::vector<double> base_losses(n, 0.0);
  report.pair_dots.assign(n, 0.0);
  ParamVector batch_grad = model.zero_params();
  std::vector<double> pair_grad(batch_grad.values.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const PreferencePair& pair = pref_batch[i];
    const double rw = model.score(params, pair.prompt, pair.winner);
    const double rl = model.score(params, pair.prompt, pair.loser);
    const double delta = rw - rl;
    base_losses[i] = pairwise_loss(delta);
    const double weight = sigmoid(delta) - 1.0;
    pair_grad.assign(pair_grad.size(), 0.0);
    model.accumulate_score_grad(params, pair.prompt, pair.winner, weight, pair_grad);
    model.accumulate_score_grad(params, pair.prompt, pair.loser, -weight, pair_grad);
    double d = 0.0;
    for (std::size_t j = 0; j < pair_grad.size(); ++j) d += pair_grad[j] * diff.grad.values[j];
    report.pair_dots[i] = d;
    for (std::size_t j = 0; j < pair_grad.size(); ++j) batch_grad.values[j] += pair_grad[j] / n;
  }
  report.batch_dot = dot(batch_grad, diff.grad);

  for (double eta : etas) {
    const ParamVector adapted = axpy(params, eta, diff.grad);
    std::vector<double> residuals(n, 0.0);
    std::vector<double> deltas(n, 0.0);
    double mean_residual = 0.0;
    std::size_t considered = 0;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const PreferencePair& pair = pref_batch[i];
      const double rw = model.score(adapted, pair.prompt, pair.winner);
      const double rl = model.score(adapted, pair.prompt, pair.loser);
      const double adapted_loss = pairwise_loss(rw - rl);
      deltas[i] = adapted_loss - base_losses[i];
      residuals[i] = std::fabs(deltas[i] - eta * report.pair_dots[i]);
      mean_residual += residuals[i] / n;
      if (report.pair_dots[i] != 0.0 && eta != 0.0) {
        ++considered;
        if ((deltas[i] > 0.0) == (eta * report.pair_dots[i] > 0.0)) ++agree;
      }
    }
    report.residuals.push_back(std::move(residuals));
    report.loss_deltas.push_back(std::move(deltas));
    report.mean_residuals.push_back(mean_residual);
    report.sign_agreement.push_back(
        considered == 0 ? 1.0 : static_cast<double>(agree) / considered);
  }
  return report;
}

}  // namespace metarm
