// Release gate. Each numbered check exercises one property the library must
// hold end to end; `acceptance <n>` runs check n and prints exactly one
// PASS/FAIL line, `acceptance` with no argument runs all ten. The exit
// status is nonzero when any executed check fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "metarm/checkpoint.hpp"
#include "metarm/config.hpp"
#include "metarm/diagnostics.hpp"
#include "metarm/iterative_loop.hpp"
#include "metarm/meta_trainer.hpp"
#include "metarm/model.hpp"
#include "metarm/objectives.hpp"
#include "metarm/rng.hpp"
#include "metarm/synthetic_env.hpp"

namespace {

using namespace metarm;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

std::vector<double> random_vec(Rng& rng, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.normal();
  return v;
}

std::vector<PreferencePair> random_pairs(Rng& rng, int count, int prompt_dim, int response_dim) {
  std::vector<PreferencePair> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back({random_vec(rng, prompt_dim), random_vec(rng, response_dim),
                   random_vec(rng, response_dim)});
  }
  return out;
}

std::vector<MetaSample> random_meta(Rng& rng, int count, int k, int prompt_dim,
                                    int response_dim) {
  std::vector<MetaSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    MetaSample s;
    s.prompt = random_vec(rng, prompt_dim);
    for (int j = 0; j < k; ++j) s.responses.push_back(random_vec(rng, response_dim));
    out.push_back(std::move(s));
  }
  return out;
}

// Init plus noise so biases are away from zero and no unit saturates.
ParamVector jittered_params(const RewardModel& model, Rng& rng) {
  ParamVector p = model.init_params();
  for (double& v : p.values) v += 0.2 * rng.normal();
  return p;
}

ExperimentPlan plan_from(const std::string& text, std::uint64_t seed) {
  ExperimentPlan plan = parse_plan(text);
  plan.seed = seed;
  return plan;
}

// Scratch directory that survives only for the lifetime of one check.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("metarm-acceptance-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void report(int n, bool pass, const std::string& detail) {
  std::printf("C%d %s: %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

// Central differences on the batch loss, h = 1e-6, error relative to the
// finite-difference gradient norm.
template <typename ValueFn>
double fd_relative_error(ValueFn&& value, ParamVector params, const ParamVector& analytic) {
  const double h = 1e-6;
  double diff_sq = 0.0;
  double fd_sq = 0.0;
  for (std::size_t i = 0; i < params.values.size(); ++i) {
    const double keep = params.values[i];
    params.values[i] = keep + h;
    const double up = value(params);
    params.values[i] = keep - h;
    const double down = value(params);
    params.values[i] = keep;
    const double g = (up - down) / (2.0 * h);
    const double d = g - analytic.values[i];
    diff_sq += d * d;
    fd_sq += g * g;
  }
  return std::sqrt(diff_sq) / std::max(std::sqrt(fd_sq), 1e-12);
}

bool check_gradients() {
  const auto start = Clock::now();
  const std::vector<std::vector<int>> architectures = {{}, {4}, {8, 8}};
  const int instances = 20;
  double worst = 0.0;
  int checked = 0;
  for (std::size_t a = 0; a < architectures.size(); ++a) {
    ModelSpec spec;
    spec.prompt_dim = 3;
    spec.response_dim = 3;
    spec.hidden_dims = architectures[a];
    for (int inst = 0; inst < instances; ++inst) {
      spec.seed = derive_seed(0xACC1, a, static_cast<std::uint64_t>(inst));
      const RewardModel model(spec);
      Rng rng(derive_seed(0xACC2, a, static_cast<std::uint64_t>(inst)));
      const ParamVector params = jittered_params(model, rng);
      const auto pairs = random_pairs(rng, 4, 3, 3);
      const auto meta = random_meta(rng, 3, 4, 3, 3);

      const LossResult pref = vanilla_loss(model, params, pairs);
      const double rel_pref = fd_relative_error(
          [&](const ParamVector& p) { return vanilla_loss(model, p, pairs).loss; }, params,
          pref.grad);
      const LossResult diff = difference_loss(model, params, meta);
      const double rel_diff = fd_relative_error(
          [&](const ParamVector& p) { return difference_value(model, p, meta); }, params,
          diff.grad);
      worst = std::max({worst, rel_pref, rel_diff});
      checked += 2;
    }
  }
  const double elapsed = seconds_since(start);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "worst relative gradient error %.2e over %d loss/batch instances (%.1fs)", worst,
                checked, elapsed);
  const bool pass = worst < 1e-5 && elapsed < 10.0;
  report(1, pass, buf);
  return pass;
}

bool check_eta_zero_reduction() {
  const auto start = Clock::now();
  EnvConfig env;
  env.prompt_dim = 8;
  env.response_dim = 8;
  env.prompts.mean.assign(8, 0.0);
  env.seed = 21;
  const OracleReward oracle = OracleReward::make(OracleReward::Kind::kBilinear, 8, 8, 22);
  const GaussianPolicy policy = GaussianPolicy::make(8, 8, 1.0, 0.0, 23);
  const auto pairs = sample_preferences(env, oracle, policy, 600, 1);
  const auto meta = sample_meta(env, policy, 64, 8, 2);

  ModelSpec spec;
  spec.prompt_dim = 8;
  spec.response_dim = 8;
  spec.hidden_dims = {16};
  spec.seed = 24;
  const RewardModel model(spec);

  TrainConfig cfg;
  cfg.steps = 200;
  cfg.alpha = 1e-3;
  cfg.optimizer = OuterOptimizer::kSgd;
  cfg.seed = 25;
  cfg.eta = 0.0;
  const TrainResult as_metarm = train(model, TrainMode::kMetarm, pairs, meta, cfg);
  const TrainResult as_vanilla = train(model, TrainMode::kVanilla, pairs, meta, cfg);

  const double elapsed = seconds_since(start);
  const bool same = bits_equal(as_metarm.params.values, as_vanilla.params.values);
  char buf[160];
  std::snprintf(buf, sizeof buf, "eta=0 metarm %s vanilla after 200 steps (%.1fs)",
                same ? "bit-identical to" : "DIVERGES from", elapsed);
  const bool pass = same && elapsed < 5.0;
  report(2, pass, buf);
  return pass;
}

bool check_probe_scaling() {
  const int instances = 12;
  const std::vector<double> etas = {1e-2, 5e-3};
  int in_range = 0;
  double lo = 1e300;
  double hi = 0.0;
  for (int inst = 0; inst < instances; ++inst) {
    ModelSpec spec;
    spec.prompt_dim = 3;
    spec.response_dim = 3;
    spec.hidden_dims = {6};
    spec.seed = derive_seed(0xACC3, static_cast<std::uint64_t>(inst));
    const RewardModel model(spec);
    Rng rng(derive_seed(0xACC4, static_cast<std::uint64_t>(inst)));
    const ParamVector params = jittered_params(model, rng);
    const auto pairs = random_pairs(rng, 6, 3, 3);
    const auto meta = random_meta(rng, 4, 5, 3, 3);
    const AlignmentProbeReport probe = alignment_probe(model, params, pairs, meta, etas);
    if (probe.mean_residuals[1] <= 0.0) continue;
    const double ratio = probe.mean_residuals[0] / probe.mean_residuals[1];
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    if (ratio >= 2.5 && ratio <= 6.0) ++in_range;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "residual ratio after halving eta in [%.2f, %.2f], within [2.5, 6] on %d/%d "
                "instances",
                lo, hi, in_range, instances);
  const bool pass = in_range >= 10;
  report(3, pass, buf);
  return pass;
}

bool check_loss_constants() {
  // Independently computed to 30 digits; 1e-12 leaves plenty of margin over
  // the double rounding of the frozen literals.
  const double kNegLogSigmoid1 = 0.313261687518222834048995494968;
  const double kNegLogSigmoidNeg1 = 1.31326168751822283404899549497;
  const bool ln2_exact = pairwise_loss(0.0) == std::numbers::ln2_v<double>;
  const bool plus_ok = std::fabs(pairwise_loss(1.0) - kNegLogSigmoid1) < 1e-12;
  const bool minus_ok = std::fabs(pairwise_loss(-1.0) - kNegLogSigmoidNeg1) < 1e-12;

  const std::vector<double> tied2 = {0.7, 0.7};
  const std::vector<double> tied3 = {-0.3, -0.3, -0.3};
  const bool tied2_ok = difference_value_from_scores(tied2) == 0.25;
  const bool tied3_ok = difference_value_from_scores(tied3) == 1.0 / 3.0;

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "pairwise_loss(0)=ln2 %s, +/-1 references %s, tied diff values k=2 %s k=3 %s",
                ln2_exact ? "exact" : "OFF", plus_ok && minus_ok ? "ok" : "OFF",
                tied2_ok ? "exact" : "OFF", tied3_ok ? "exact" : "OFF");
  const bool pass = ln2_exact && plus_ok && minus_ok && tied2_ok && tied3_ok;
  report(4, pass, buf);
  return pass;
}

bool check_frozen_collapse() {
  const auto start = Clock::now();
  int monotone = 0;
  int halved = 0;
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ExperimentPlan plan = plan_from(R"({"rm_mode": "frozen"})", seed);
    const ExperimentResult res = run_experiment(plan);
    std::vector<double> var;
    for (const RoundArtifacts& art : res.rounds) var.push_back(art.metrics.diff_variance);
    bool mono = true;
    for (std::size_t r = 1; r < var.size(); ++r) mono = mono && var[r] <= var[r - 1];
    if (mono) ++monotone;
    const double ratio = var.back() / var.front();
    worst_ratio = std::max(worst_ratio, ratio);
    if (ratio < 0.5) ++halved;
  }
  const double elapsed = seconds_since(start);
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "frozen-RM gap variance non-increasing in %d/3 seeds, worst round3/round0 = %.3f, "
                "halved in %d/3 (%.1fs)",
                monotone, worst_ratio, halved, elapsed);
  const bool pass = monotone >= 2 && halved >= 2 && elapsed < 120.0;
  report(5, pass, buf);
  return pass;
}

bool check_accuracy_parity() {
  double mean_vanilla = 0.0;
  double mean_metarm = 0.0;
  const int seeds = 5;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    const ExperimentPlan vanilla = plan_from(R"({"rounds": 1, "rm_mode": "vanilla"})", seed);
    const ExperimentPlan metarm = plan_from(R"({"rounds": 1, "rm_mode": "metarm"})", seed);
    mean_vanilla += run_experiment(vanilla).rounds[0].metrics.val_accuracy;
    mean_metarm += run_experiment(metarm).rounds[0].metrics.val_accuracy;
  }
  mean_vanilla /= seeds;
  mean_metarm /= seeds;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "held-out accuracy %.4f (metarm) vs %.4f (vanilla), mean of %d seeds",
                mean_metarm, mean_vanilla, seeds);
  const bool pass = mean_metarm >= mean_vanilla - 0.03;
  report(6, pass, buf);
  return pass;
}

bool check_dispersion() {
  int greater = 0;
  double last_m = 0.0;
  double last_v = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ExperimentResult vanilla =
        run_experiment(plan_from(R"({"rm_mode": "vanilla"})", seed));
    const ExperimentResult metarm = run_experiment(plan_from(R"({"rm_mode": "metarm"})", seed));
    bool ok = true;
    for (int r = 2; r <= 3; ++r) {
      const double nv = normalize_distribution(vanilla.rounds[r].diffs).variance;
      const double nm = normalize_distribution(metarm.rounds[r].diffs).variance;
      ok = ok && nm > nv;
      if (r == 3) {
        last_m = nm;
        last_v = nv;
      }
    }
    if (ok) ++greater;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "normalized gap variance metarm > vanilla at rounds 2 and 3 in %d/3 seeds "
                "(seed 3 round 3: %.4f vs %.4f)",
                greater, last_m, last_v);
  const bool pass = greater >= 2;
  report(7, pass, buf);
  return pass;
}

bool check_win_rates() {
  const auto start = Clock::now();
  const int seeds = 3;
  std::vector<double> win_vanilla(4, 0.0);
  std::vector<double> win_metarm(4, 0.0);
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    const ExperimentResult vanilla =
        run_experiment(plan_from(R"({"rm_mode": "vanilla"})", seed));
    const ExperimentResult metarm = run_experiment(plan_from(R"({"rm_mode": "metarm"})", seed));
    for (int r = 0; r < 4; ++r) {
      win_vanilla[r] += vanilla.rounds[r].metrics.win_rate / seeds;
      win_metarm[r] += metarm.rounds[r].metrics.win_rate / seeds;
    }
  }
  const double elapsed = seconds_since(start);
  const bool late_rounds =
      win_metarm[2] >= win_vanilla[2] && win_metarm[3] >= win_vanilla[3];
  const bool round1 = win_metarm[1] > 0.5 && win_vanilla[1] > 0.5;
  char buf[240];
  std::snprintf(buf, sizeof buf,
                "mean win rates r1..r3 metarm %.3f/%.3f/%.3f vanilla %.3f/%.3f/%.3f (%.1fs)",
                win_metarm[1], win_metarm[2], win_metarm[3], win_vanilla[1], win_vanilla[2],
                win_vanilla[3], elapsed);
  const bool pass = late_rounds && round1 && elapsed < 600.0;
  report(8, pass, buf);
  return pass;
}

bool check_ood() {
  const std::string ood_env =
      R"("env": {"ood": {"mean": [2, 2, 2, 2, 2, 2, 2, 2], "sigma": 1.0}},)"
      R"( "data": {"meta_prompts": "ood"})";
  int var_greater = 0;
  double mean_acc_vanilla = 0.0;
  double mean_acc_metarm = 0.0;
  const int seeds = 3;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    const ExperimentResult vanilla =
        run_experiment(plan_from("{" + ood_env + R"(, "rm_mode": "vanilla"})", seed));
    const ExperimentResult metarm =
        run_experiment(plan_from("{" + ood_env + R"(, "rm_mode": "metarm"})", seed));
    const RoundArtifacts& av = vanilla.rounds.back();
    const RoundArtifacts& am = metarm.rounds.back();
    if (!av.ood || !am.ood) {
      report(9, false, "run produced no OOD metrics");
      return false;
    }
    if (am.ood->diff_variance > av.ood->diff_variance) ++var_greater;
    mean_acc_vanilla += av.ood->accuracy / seeds;
    mean_acc_metarm += am.ood->accuracy / seeds;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "OOD gap variance metarm > vanilla in %d/3 seeds; OOD accuracy %.4f vs %.4f",
                var_greater, mean_acc_metarm, mean_acc_vanilla);
  const bool pass = var_greater >= 2 && mean_acc_metarm >= mean_acc_vanilla - 0.05;
  report(9, pass, buf);
  return pass;
}

bool check_replay() {
  TempDir tmp;
  const fs::path first = tmp.path() / "first";
  const fs::path second = tmp.path() / "second";
  const ExperimentPlan plan = plan_from(R"({"rounds": 2})", 9);
  const ExperimentResult res = run_experiment(plan, first);

  // The written plan is the manifest; the rerun starts from nothing else.
  const ExperimentPlan replay = parse_plan(read_text_file(first / "plan.json"));
  run_experiment(replay, second);
  const bool metrics_same =
      read_text_file(first / "metrics.csv") == read_text_file(second / "metrics.csv");

  const LoadedCheckpoint loaded = load_checkpoint(first / "round_1" / "rm.ckpt");
  const bool params_same = bits_equal(loaded.params.values, res.rounds[1].rm_params.values);
  const RewardModel model(loaded.spec);
  Rng rng(0xACC5);
  bool scores_same = true;
  for (int i = 0; i < 5; ++i) {
    const auto prompt = random_vec(rng, loaded.spec.prompt_dim);
    const auto response = random_vec(rng, loaded.spec.response_dim);
    const double a = model.score(loaded.params, prompt, response);
    const double b = model.score(res.rounds[1].rm_params, prompt, response);
    scores_same = scores_same && std::memcmp(&a, &b, sizeof a) == 0;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "manifest rerun metrics.csv %s; checkpoint params %s, scores %s",
                metrics_same ? "byte-identical" : "DIFFERS",
                params_same ? "bit-exact" : "DIFFER", scores_same ? "bit-exact" : "DIFFER");
  const bool pass = metrics_same && params_same && scores_same;
  report(10, pass, buf);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  using Check = bool (*)();
  const Check checks[] = {check_gradients,   check_eta_zero_reduction,
                          check_probe_scaling, check_loss_constants,
                          check_frozen_collapse, check_accuracy_parity,
                          check_dispersion,  check_win_rates,
                          check_ood,         check_replay};
  const int total = static_cast<int>(sizeof(checks) / sizeof(checks[0]));
  if (argc > 1) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > total) {
      std::fprintf(stderr, "usage: %s [1-%d]\n", argv[0], total);
      return 2;
    }
    return checks[n - 1]() ? 0 : 1;
  }
  int failures = 0;
  for (const Check& check : checks) {
    if (!check()) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
