#include "metarm/iterative_loop.hpp"

#include <cmath>
#include <utility>

#include "json.hpp"

#include "metarm/checkpoint.hpp"
#include "metarm/config.hpp"
#include "metarm/csv.hpp"
#include "metarm/errors.hpp"

namespace metarm {

namespace {

// Every random draw in an experiment descends from plan.seed through one of
// these tags, so two plans differing only in seed diverge everywhere and a
// rerun of the same plan replays every byte.
constexpr std::uint64_t kTagEnvSeed = 0x456e765365656400ULL;
constexpr std::uint64_t kTagModelSeed = 0x4d6f64656c536400ULL;
constexpr std::uint64_t kTagOracleSeed = 0x4f7261636c655300ULL;
constexpr std::uint64_t kTagPolicySeed = 0x506f6c6963795300ULL;
constexpr std::uint64_t kTagTrainSeed = 0x547261696e536400ULL;
constexpr std::uint64_t kEvalStream = 0x4576616c57696e00ULL;

// Sampler call-site salts; the round index is added in.
constexpr std::uint64_t kSaltD = 1ULL << 32;
constexpr std::uint64_t kSaltS = 2ULL << 32;
constexpr std::uint64_t kSaltImprove = 3ULL << 32;
constexpr std::uint64_t kSaltEval = 4ULL << 32;
constexpr std::uint64_t kSaltDiff = 5ULL << 32;
constexpr std::uint64_t kSaltOodPairs = 6ULL << 32;
constexpr std::uint64_t kSaltOodDiff = 7ULL << 32;

EnvConfig effective_env(const ExperimentPlan& plan) {
  EnvConfig env = plan.env;
  env.seed = derive_seed(plan.seed, kTagEnvSeed, plan.env.seed);
  return env;
}

OracleReward effective_oracle(const ExperimentPlan& plan) {
  return OracleReward::make(plan.oracle_kind, plan.env.prompt_dim, plan.env.response_dim,
                            derive_seed(plan.seed, kTagOracleSeed, plan.oracle_seed));
}

ModelSpec effective_model_spec(const ExperimentPlan& plan) {
  ModelSpec spec = plan.model;
  spec.prompt_dim = plan.env.prompt_dim;
  spec.response_dim = plan.env.response_dim;
  spec.seed = derive_seed(plan.seed, kTagModelSeed, plan.model.seed);
  return spec;
}

struct EvalOutcome {
  double win_rate = 0.0;
  double tie_rate = 0.0;
  double mean_reward = 0.0;
};

// One response per prompt per policy; the oracle judges.
EvalOutcome evaluate_policy(const EnvConfig& env, const OracleReward& oracle,
                            const GaussianPolicy& current, const GaussianPolicy& baseline,
                            int prompts, std::uint64_t stream) {
  Rng rng(derive_seed(env.seed, kEvalStream, stream));
  int wins = 0, ties = 0;
  double reward_sum = 0.0;
  for (int i = 0; i < prompts; ++i) {
    const std::vector<double> x = env.sample_prompt(rng);
    const std::vector<double> y_cur = current.sample_response(x, rng);
    const std::vector<double> y_base = baseline.sample_response(x, rng);
    const double r_cur = oracle.score(x, y_cur);
    const double r_base = oracle.score(x, y_base);
    if (r_cur > r_base) ++wins;
    if (r_cur == r_base) ++ties;
    reward_sum += r_cur;
  }
  EvalOutcome out;
  out.win_rate = double(wins) / prompts;
  out.tie_rate = double(ties) / prompts;
  out.mean_reward = reward_sum / prompts;
  return out;
}

void write_round_artifacts(const std::filesystem::path& out_dir, int round,
                           const ModelSpec& spec, const RoundArtifacts& art,
                           const ExperimentPlan& plan) {
  const std::filesystem::path dir = out_dir / ("round_" + std::to_string(round));
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  CheckpointMeta meta;
  meta.seed = plan.seed;
  meta.mode = rm_mode_name(plan.mode_for_round(round));
  meta.steps = int(art.trace.size());
  meta.note = "round " + std::to_string(round);
  save_checkpoint(dir / "rm.ckpt", spec, art.rm_params, meta);

  CsvWriter trace(dir / "trace.csv",
                  {"step", "vanilla_loss", "diff_value", "diff_value_adapted", "val_accuracy",
                   "grad_norm_vanilla", "grad_norm_diff", "grad_dot", "clipped"});
  for (const StepTrace& t : art.trace) {
    trace.write_row({std::to_string(t.step), format_double(t.vanilla_loss),
                     format_double(t.diff_value), format_double(t.diff_value_adapted),
                     format_double(t.val_accuracy), format_double(t.grad_norm_vanilla),
                     format_double(t.grad_norm_diff), format_double(t.grad_dot),
                     t.clipped ? "1" : "0"});
  }

  CsvWriter diffs(dir / "diffs.csv", {"diff"});
  for (double v : art.diffs.raw) diffs.write_row({format_double(v)});

  nlohmann::json j;
  j["count"] = art.diffs.raw.size();
  j["mean"] = art.diffs.mean;
  j["variance"] = art.diffs.variance;
  j["max"] = art.diffs.max;
  j["normalized"] = art.diffs.normalized;
  j["bin_edges"] = art.diffs.bin_edges;
  j["counts"] = art.diffs.counts;
  write_text_file(dir / "diffs.json", j.dump(2) + "\n");
}

}  // namespace

void DataConfig::validate() const {
  if (pair_count < 1) throw ConfigError("DataConfig: pair_count must be positive");
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw ConfigError("DataConfig: val_fraction must be in [0, 1)");
  }
  if (meta_count < 1) throw ConfigError("DataConfig: meta_count must be positive");
  if (meta_k < 2) throw ConfigError("DataConfig: meta_k must be at least 2");
}

void ExperimentPlan::validate() const {
  if (rounds < 1) throw ConfigError("ExperimentPlan: rounds must be positive");
  if (rm_modes.empty()) throw ConfigError("ExperimentPlan: rm_modes must not be empty");
  if (policy_sigma <= 0.0) throw ConfigError("ExperimentPlan: policy_sigma must be positive");
  if (eval_prompts < 1) throw ConfigError("ExperimentPlan: eval_prompts must be positive");
  env.validate();
  train.validate();
  data.validate();
  improve.validate();
  if (data.meta_prompts == MetaPromptSource::kOod && !env.ood) {
    throw ConfigError("ExperimentPlan: meta_prompts \"ood\" needs an env ood spec");
  }
  ModelSpec spec = model;
  spec.prompt_dim = env.prompt_dim;
  spec.response_dim = env.response_dim;
  spec.validate();
}

RmMode ExperimentPlan::mode_for_round(int round) const {
  if (round < 0 || round >= rounds) throw ConfigError("ExperimentPlan: round out of range");
  if (std::size_t(round) < rm_modes.size()) return rm_modes[std::size_t(round)];
  return rm_modes.back();
}

const char* rm_mode_name(RmMode mode) {
  switch (mode) {
    case RmMode::kVanilla: return "vanilla";
    case RmMode::kMetarm: return "metarm";
    case RmMode::kFrozen: return "frozen";
  }
  return "vanilla";
}

const char* meta_prompt_source_name(MetaPromptSource source) {
  switch (source) {
    case MetaPromptSource::kFresh: return "fresh";
    case MetaPromptSource::kReuseD: return "reuse_d";
    case MetaPromptSource::kOod: return "ood";
  }
  return "fresh";
}

OodMetrics evaluate_ood(const ExperimentPlan& plan, const RewardModel& model,
                        const ParamVector& rm_params, const GaussianPolicy& policy,
                        int round, std::uint64_t stream) {
  if (!plan.env.ood) throw ConfigError("evaluate_ood: plan env has no ood spec");
  const EnvConfig env = effective_env(plan);
  EnvConfig ood_env = ood_shift(env);
  ood_env.label_mode = LabelMode::kDeterministic;
  const OracleReward oracle = effective_oracle(plan);
  const auto pairs = sample_preferences(ood_env, oracle, policy, plan.eval_prompts,
                                        kSaltOodPairs + std::uint64_t(round) + stream);
  OodMetrics out;
  out.round = round;
  out.accuracy = rm_accuracy(model, rm_params, pairs);
  const DiffDistribution diffs =
      reward_diff_distribution(model, rm_params, policy, ood_env, plan.eval_prompts, 1,
                               kSaltOodDiff + std::uint64_t(round) + stream);
  out.diff_variance = diffs.variance;
  return out;
}

ExperimentResult run_experiment(const ExperimentPlan& plan,
                                const std::filesystem::path& out_dir) {
  plan.validate();
  const bool write = !out_dir.empty();
  if (write) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    write_text_file(out_dir / "plan.json", canonical_plan(plan));
  }

  const EnvConfig env = effective_env(plan);
  const OracleReward oracle = effective_oracle(plan);
  const ModelSpec model_spec = effective_model_spec(plan);
  const RewardModel rm(model_spec);
  const GaussianPolicy policy0 =
      GaussianPolicy::make(env.prompt_dim, env.response_dim, plan.policy_sigma,
                           plan.policy_init_scale,
                           derive_seed(plan.seed, kTagPolicySeed, plan.policy_seed));

  // D is drawn once from the initial policy and never regenerated.
  const auto full_data = sample_preferences(env, oracle, policy0, plan.data.pair_count, kSaltD);
  std::size_t n_val = std::size_t(std::llround(plan.data.val_fraction * double(full_data.size())));
  if (n_val >= full_data.size()) n_val = full_data.size() - 1;
  const std::span<const PreferencePair> train_view(full_data.data(),
                                                   full_data.size() - n_val);
  const std::span<const PreferencePair> val_view(full_data.data() + (full_data.size() - n_val),
                                                 n_val);
  const std::span<const PreferencePair> acc_view =
      val_view.empty() ? std::span<const PreferencePair>(full_data) : val_view;

  std::vector<std::vector<double>> prompt_pool;
  if (plan.data.meta_prompts == MetaPromptSource::kReuseD) {
    prompt_pool.reserve(full_data.size());
    for (const auto& pair : full_data) prompt_pool.push_back(pair.prompt);
  }

  std::optional<CsvWriter> metrics_csv;
  std::optional<CsvWriter> ood_csv;
  if (write) {
    metrics_csv.emplace(out_dir / "metrics.csv",
                        std::vector<std::string>{"round", "win_rate", "tie_rate", "val_accuracy",
                                                 "diff_variance", "mean_oracle_reward"});
    if (plan.env.ood) {
      ood_csv.emplace(out_dir / "ood.csv",
                      std::vector<std::string>{"round", "accuracy", "diff_variance"});
    }
  }

  ExperimentResult result;
  GaussianPolicy policy = policy0;
  ParamVector round0_params;
  ParamVector prev_params;

  for (int r = 0; r < plan.rounds; ++r) {
    const RmMode mode = plan.mode_for_round(r);
    RoundArtifacts art;

    std::vector<MetaSample> meta_set;
    switch (plan.data.meta_prompts) {
      case MetaPromptSource::kFresh:
        meta_set = sample_meta(env, policy, plan.data.meta_count, plan.data.meta_k,
                               kSaltS + std::uint64_t(r));
        break;
      case MetaPromptSource::kReuseD:
        meta_set = sample_meta_with_prompts(env, policy, prompt_pool, plan.data.meta_count,
                                            plan.data.meta_k, kSaltS + std::uint64_t(r));
        break;
      case MetaPromptSource::kOod:
        meta_set = sample_meta(ood_shift(env), policy, plan.data.meta_count, plan.data.meta_k,
                               kSaltS + std::uint64_t(r));
        break;
    }

    if (mode == RmMode::kFrozen && r > 0) {
      art.rm_params = round0_params;
    } else {
      const TrainMode tmode =
          mode == RmMode::kMetarm ? TrainMode::kMetarm : TrainMode::kVanilla;
      TrainConfig tc = plan.train;
      tc.seed = derive_seed(plan.seed, kTagTrainSeed, plan.train.seed, std::uint64_t(r));
      ParamVector init =
          (plan.warm_start && r > 0) ? prev_params : rm.init_params();
      try {
        TrainResult trained =
            train_from(rm, tmode, std::move(init), train_view, meta_set, tc, acc_view);
        art.rm_params = std::move(trained.params);
        art.trace = std::move(trained.trace);
      } catch (const DivergenceError& e) {
        throw DivergenceError::contextual(
            "round " + std::to_string(r) + ", " + e.what(), e.step());
      }
    }
    if (r == 0) round0_params = art.rm_params;
    prev_params = art.rm_params;

    policy = improve_policy(policy, rm, art.rm_params, env, plan.improve,
                            kSaltImprove + std::uint64_t(r));

    const EvalOutcome ev =
        evaluate_policy(env, oracle, policy, policy0, plan.eval_prompts,
                        kSaltEval + std::uint64_t(r));
    art.diffs = reward_diff_distribution(rm, art.rm_params, policy, env, plan.eval_prompts, 1,
                                         kSaltDiff + std::uint64_t(r));
    art.metrics.round = r;
    art.metrics.win_rate = ev.win_rate;
    art.metrics.tie_rate = ev.tie_rate;
    art.metrics.val_accuracy = rm_accuracy(rm, art.rm_params, acc_view);
    art.metrics.diff_variance = art.diffs.variance;
    art.metrics.mean_oracle_reward = ev.mean_reward;
    if (plan.env.ood) art.ood = evaluate_ood(plan, rm, art.rm_params, policy, r);

    if (write) {
      write_round_artifacts(out_dir, r, model_spec, art, plan);
      metrics_csv->write_row({std::to_string(art.metrics.round),
                              format_double(art.metrics.win_rate),
                              format_double(art.metrics.tie_rate),
                              format_double(art.metrics.val_accuracy),
                              format_double(art.metrics.diff_variance),
                              format_double(art.metrics.mean_oracle_reward)});
      if (ood_csv && art.ood) {
        ood_csv->write_row({std::to_string(art.ood->round), format_double(art.ood->accuracy),
                            format_double(art.ood->diff_variance)});
      }
    }
    result.rounds.push_back(std::move(art));
  }
  result.final_policy = policy;
  return result;
}

}  // namespace metarm
