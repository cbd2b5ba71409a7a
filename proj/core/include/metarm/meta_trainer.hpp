#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "metarm/objectives.hpp"

namespace metarm {

enum class TrainMode { kVanilla, kMetarm };
enum class OuterOptimizer { kSgd, kAdam };

struct TrainConfig {
  double eta = 1.0;    // inner ascent step on the difference objective
  double alpha = 0.1;  // outer descent step on the preference loss
  int pref_batch = 16;  // preference mini-batch size
  int meta_batch = 16;  // meta mini-batch size
  int steps = 0;        // total steps; 0 = one pass over the preference set
  OuterOptimizer optimizer = OuterOptimizer::kSgd;
  std::uint64_t seed = 0;
  bool exact_pair_mean = false;
  double grad_clip = 1e3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

// Per-step diagnostics. Losses and gradients are taken at the step's
// original parameters; diff_value_adapted is the only adapted-side value.
struct StepTrace {
  int step = 0;
  double vanilla_loss = 0.0;
  double diff_value = 0.0;
  double diff_value_adapted = 0.0;
  double val_accuracy = 0.0;
  double grad_norm_vanilla = 0.0;
  double grad_norm_diff = 0.0;
  double grad_dot = 0.0;
  bool clipped = false;
};

/// One ascent step on the difference objective: params + eta * dJ/dparams.
// The input vector is untouched.
ParamVector meta_ascend(const RewardModel& model, const ParamVector& params,
                        std::span<const MetaSample> meta_batch, double eta,
                        const DiffLossOptions& opts = {});

struct StepResult {
  ParamVector params;
  StepTrace trace;
};

struct TrainResult {
  ParamVector params;
  std::vector<StepTrace> trace;
};

// Drives single optimization steps. Owns the outer-optimizer state; the
// parameter vector itself is never mutated in place.
class MetaTrainer {
 public:
  MetaTrainer(const RewardModel& model, TrainMode mode, TrainConfig config);

  // Ascend on the meta batch (metarm mode only), evaluate the preference
  // gradient at the adapted parameters, and apply it to the originals.
  // val, when non-empty, is used for the trace accuracy; otherwise the
  // preference batch is.
  StepResult step(const ParamVector& params, std::span<const PreferencePair> pref_batch,
                  std::span<const MetaSample> meta_batch,
                  std::span<const PreferencePair> val = {});

  const TrainConfig& config() const { return config_; }

 private:
  const RewardModel& model_;
  TrainMode mode_;
  TrainConfig config_;
  int step_index_ = 0;
  std::vector<double> adam_m_;
  std::vector<double> adam_v_;
};

// Full training run. Preference batches are drawn by seeded shuffling
// without replacement per epoch; meta batches are drawn with replacement
// each step. Vanilla mode ignores eta and never ascends; it still records
// difference diagnostics when meta data is supplied.
TrainResult train(const RewardModel& model, TrainMode mode,
                  std::span<const PreferencePair> pairs, std::span<const MetaSample> meta,
                  const TrainConfig& config, std::span<const PreferencePair> val = {});

// As train, from explicit initial parameters instead of a fresh init.
TrainResult train_from(const RewardModel& model, TrainMode mode, ParamVector init,
                       std::span<const PreferencePair> pairs, std::span<const MetaSample> meta,
                       const TrainConfig& config, std::span<const PreferencePair> val = {});

// Numerical check that one ascent step perturbs each pair's loss by
// eta * <grad of the pair loss, grad of the difference objective> up to a
// remainder quadratic in eta.
struct AlignmentProbeReport {
  std::vector<double> etas;
  double batch_dot = 0.0;
  std::vector<double> pair_dots;
  std::vector<std::vector<double>> residuals;    // [eta][pair]
  std::vector<std::vector<double>> loss_deltas;  // [eta][pair]
  std::vector<double> mean_residuals;            // [eta]
  std::vector<double> sign_agreement;            // [eta], over pairs with nonzero dot
};

AlignmentProbeReport alignment_probe(const RewardModel& model, const ParamVector& params,
                                     std::span<const PreferencePair> pref_batch,
                                     std::span<const MetaSample> meta_batch,
                                     std::span<const double> etas,
                                     const DiffLossOptions& opts = {});

}  // namespace metarm
