#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "metarm/diagnostics.hpp"
#include "metarm/meta_trainer.hpp"
#include "metarm/model.hpp"
#include "metarm/synthetic_env.hpp"

namespace metarm {

// Reward-model regime per round. frozen trains once at round 0 and reuses
// those weights afterwards, which is the distribution-shift worst case.
enum class RmMode { kVanilla, kMetarm, kFrozen };

// Where meta-sample prompts come from each round: the env prompt
// distribution, the fixed preference set's prompts, or the shifted
// distribution.
enum class MetaPromptSource { kFresh, kReuseD, kOod };

struct DataConfig {
  int pair_count = 2000;
  double val_fraction = 0.2;
  int meta_count = 256;
  int meta_k = 16;
  MetaPromptSource meta_prompts = MetaPromptSource::kFresh;

  void validate() const;
};

// One experiment: fixed preference data D, then per round resample the meta
// set S from the current policy, train the reward model on D, improve the
// policy against it, and measure. All randomness derives from `seed`, with
// the per-section seeds folded in, so a plan rerun reproduces every byte.
struct ExperimentPlan {
  int rounds = 4;
  std::vector<RmMode> rm_modes = {RmMode::kMetarm};  // broadcast when shorter than rounds
  bool warm_start = false;
  std::uint64_t seed = 0;

  ModelSpec model;  // dims filled from env
  TrainConfig train;
  EnvConfig env;
  OracleReward::Kind oracle_kind = OracleReward::Kind::kBilinear;
  std::uint64_t oracle_seed = 0;
  double policy_sigma = 1.0;
  double policy_init_scale = 0.0;
  std::uint64_t policy_seed = 0;
  DataConfig data;
  ImproveConfig improve;
  int eval_prompts = 1000;

  void validate() const;
  RmMode mode_for_round(int round) const;
};

// metrics.csv row, in column order.
struct RoundMetrics {
  int round = 0;
  double win_rate = 0.0;   // current policy beats the round-0 policy, oracle judged
  double tie_rate = 0.0;
  double val_accuracy = 0.0;
  double diff_variance = 0.0;  // reward-gap variance on current policy samples
  double mean_oracle_reward = 0.0;
};

struct OodMetrics {
  int round = 0;
  double accuracy = 0.0;  // against oracle-labeled OOD pairs
  double diff_variance = 0.0;
};

struct RoundArtifacts {
  RoundMetrics metrics;
  std::optional<OodMetrics> ood;
  ParamVector rm_params;
  std::vector<StepTrace> trace;  // empty for reused frozen rounds
  DiffDistribution diffs;
};

struct ExperimentResult {
  std::vector<RoundArtifacts> rounds;
  GaussianPolicy final_policy;
};

// Runs the full loop. When out_dir is non-empty, writes plan.json,
// round_<r>/{rm.ckpt,trace.csv,diffs.csv,diffs.json}, metrics.csv, and
// ood.csv when the env declares a shifted distribution.
ExperimentResult run_experiment(const ExperimentPlan& plan,
                                const std::filesystem::path& out_dir = {});

// RM accuracy on deterministically labeled OOD pairs plus reward-gap
// variance on OOD-prompt policy samples.
OodMetrics evaluate_ood(const ExperimentPlan& plan, const RewardModel& model,
                        const ParamVector& rm_params, const GaussianPolicy& policy,
                        int round, std::uint64_t stream = 0);

const char* rm_mode_name(RmMode mode);
const char* meta_prompt_source_name(MetaPromptSource source);

}  // namespace metarm
