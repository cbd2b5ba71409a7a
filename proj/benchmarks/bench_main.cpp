#include <benchmark/benchmark.h>

#include <vector>

#include "metarm/diagnostics.hpp"
#include "metarm/meta_trainer.hpp"
#include "metarm/model.hpp"
#include "metarm/objectives.hpp"
#include "metarm/synthetic_env.hpp"

namespace {

using namespace metarm;

ModelSpec bench_spec() {
  ModelSpec spec;
  spec.prompt_dim = 8;
  spec.response_dim = 8;
  spec.hidden_dims = {16};
  spec.seed = 7;
  return spec;
}

EnvConfig bench_env() {
  EnvConfig env;
  env.prompt_dim = 8;
  env.response_dim = 8;
  env.seed = 11;
  return env;
}

struct BenchData {
  RewardModel model{bench_spec()};
  ParamVector params;
  std::vector<PreferencePair> pairs;
  std::vector<MetaSample> meta;

  BenchData() {
    params = model.init_params();
    const EnvConfig env = bench_env();
    const auto oracle = OracleReward::make(OracleReward::Kind::kBilinear, 8, 8, 3);
    const auto policy = GaussianPolicy::make(8, 8, 1.0, 0.0, 5);
    pairs = sample_preferences(env, oracle, policy, 64);
    meta = sample_meta(env, policy, 16, 16);
  }
};

BenchData& data() {
  static BenchData d;
  return d;
}

void BM_ScoreGrad(benchmark::State& state) {
  BenchData& d = data();
  ParamVector grad = d.model.zero_params();
  const auto& pair = d.pairs.front();
  for (auto _ : state) {
    const double s =
        d.model.accumulate_score_grad(d.params, pair.prompt, pair.winner, 1.0, grad.values);
    benchmark::DoNotOptimize(s);
    benchmark::DoNotOptimize(grad.values.data());
  }
}
BENCHMARK(BM_ScoreGrad);

void BM_VanillaLoss(benchmark::State& state) {
  BenchData& d = data();
  const std::span<const PreferencePair> batch(d.pairs.data(), 16);
  for (auto _ : state) {
    const LossResult r = vanilla_loss(d.model, d.params, batch);
    benchmark::DoNotOptimize(r.loss);
  }
}
BENCHMARK(BM_VanillaLoss);

void BM_DifferenceLoss(benchmark::State& state) {
  BenchData& d = data();
  const std::span<const MetaSample> batch(d.meta.data(), 16);
  for (auto _ : state) {
    const LossResult r = difference_loss(d.model, d.params, batch);
    benchmark::DoNotOptimize(r.loss);
  }
}
BENCHMARK(BM_DifferenceLoss);

void BM_MetaStep(benchmark::State& state) {
  BenchData& d = data();
  TrainConfig config;
  config.eta = 1e-3;
  config.alpha = 1e-3;
  for (auto _ : state) {
    MetaTrainer trainer(d.model, TrainMode::kMetarm, config);
    const StepResult r = trainer.step(d.params, std::span<const PreferencePair>(d.pairs.data(), 16),
                                      std::span<const MetaSample>(d.meta.data(), 16));
    benchmark::DoNotOptimize(r.params.values.data());
  }
}
BENCHMARK(BM_MetaStep);

void BM_SamplePreferences(benchmark::State& state) {
  const EnvConfig env = bench_env();
  const auto oracle = OracleReward::make(OracleReward::Kind::kBilinear, 8, 8, 3);
  const auto policy = GaussianPolicy::make(8, 8, 1.0, 0.0, 5);
  std::uint64_t stream = 0;
  for (auto _ : state) {
    const auto pairs = sample_preferences(env, oracle, policy, 64, stream++);
    benchmark::DoNotOptimize(pairs.data());
  }
}
BENCHMARK(BM_SamplePreferences);

void BM_DiffDistribution(benchmark::State& state) {
  BenchData& d = data();
  const EnvConfig env = bench_env();
  const auto policy = GaussianPolicy::make(8, 8, 1.0, 0.0, 5);
  std::uint64_t stream = 0;
  for (auto _ : state) {
    const DiffDistribution dist =
        reward_diff_distribution(d.model, d.params, policy, env, 256, 1, stream++);
    benchmark::DoNotOptimize(dist.variance);
  }
}
BENCHMARK(BM_DiffDistribution);

}  // namespace

BENCHMARK_MAIN();
