#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "metarm/checkpoint.hpp"
#include "metarm/config.hpp"
#include "metarm/csv.hpp"
#include "metarm/dataset_io.hpp"
#include "metarm/diagnostics.hpp"
#include "metarm/errors.hpp"
#include "metarm/iterative_loop.hpp"
#include "metarm/meta_trainer.hpp"
#include "metarm/model.hpp"
#include "metarm/objectives.hpp"
#include "metarm/synthetic_env.hpp"

namespace fs = std::filesystem;
using namespace metarm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIo = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool force = false;
  int verbose = 0;
};

void add_common(CLI::App* sub, CommonArgs& args, bool config_required = true) {
  auto* config = sub->add_option("-c,--config", args.config_path, "JSON config file");
  if (config_required) config->required();
  sub->add_option("-o,--out", args.out_dir, "output directory")->required();
  sub->add_option("-s,--seed", args.seed, "override the config's master seed");
  sub->add_flag("-f,--force", args.force, "replace existing output directory contents");
  sub->add_flag("-v,--verbose", args.verbose, "more progress output");
}

// Claims the directory: refuses a non-empty or still-locked directory unless
// forced, then drops a lock that release_out_dir removes on success. An
// interrupted run keeps its lock, so reruns refuse until forced.
void prepare_out_dir(const fs::path& out, bool force) {
  std::error_code ec;
  if (fs::exists(out)) {
    if (!fs::is_directory(out)) {
      throw IoError(out.string() + " exists and is not a directory");
    }
    const bool locked = fs::exists(out / ".lock");
    const bool nonempty = !fs::is_empty(out, ec);
    if ((locked || nonempty) && !force) {
      throw IoError(out.string() +
                    (locked ? " holds a lock from an unfinished run" : " is not empty") +
                    "; pass --force to replace it");
    }
    for (const auto& entry : fs::directory_iterator(out)) {
      fs::remove_all(entry.path(), ec);
      if (ec) throw IoError("cannot clear " + entry.path().string() + ": " + ec.message());
    }
  } else {
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  }
  std::ofstream lock(out / ".lock");
  if (!lock) throw IoError("cannot create lock in " + out.string());
  lock << "in progress\n";
}

void release_out_dir(const fs::path& out) { fs::remove(out / ".lock"); }

void cmd_gen_data(const CommonArgs& args) {
  GenDataConfig cfg = parse_gen_data_config(read_text_file(args.config_path));
  if (args.seed) cfg.env.seed = *args.seed;
  cfg.validate();

  const fs::path out(args.out_dir);
  prepare_out_dir(out, args.force);

  const OracleReward oracle = OracleReward::make(cfg.oracle_kind, cfg.env.prompt_dim,
                                                 cfg.env.response_dim, cfg.oracle_seed);
  const GaussianPolicy policy =
      GaussianPolicy::make(cfg.env.prompt_dim, cfg.env.response_dim, cfg.policy_sigma,
                           cfg.policy_init_scale, cfg.policy_seed);
  const auto pairs = sample_preferences(cfg.env, oracle, policy, cfg.pair_count);
  const auto meta = sample_meta(cfg.env, policy, cfg.meta_count, cfg.meta_k);

  const std::string canonical = canonical_gen_data_config(cfg);
  const std::string hash = fnv1a_hex(canonical);
  save_preferences(out / "preferences.jsonl", pairs, hash, cfg.env.seed);
  save_meta(out / "meta.jsonl", meta, hash, cfg.env.seed);
  write_text_file(out / "config.json", canonical);

  nlohmann::json manifest;
  manifest["config_hash"] = hash;
  manifest["files"] = {{"preferences", "preferences.jsonl"}, {"meta", "meta.jsonl"}};
  manifest["seeds"] = {{"env", cfg.env.seed},
                       {"oracle", cfg.oracle_seed},
                       {"policy", cfg.policy_seed}};
  write_text_file(out / "manifest.json", manifest.dump(2) + "\n");

  release_out_dir(out);
  std::cout << "wrote " << pairs.size() << " preference pairs and " << meta.size()
            << " meta samples to " << out.string() << " (config hash " << hash << ")\n";
}

void cmd_train(const CommonArgs& args, const std::string& mode_override) {
  TrainJobConfig cfg = parse_train_config(read_text_file(args.config_path));
  if (args.seed) cfg.train.seed = *args.seed;
  if (!mode_override.empty()) cfg.mode = parse_train_mode(mode_override);
  cfg.validate();

  const PreferenceDataset prefs = load_preferences(cfg.preferences_path);
  MetaDataset meta;
  if (!cfg.meta_path.empty()) {
    meta = load_meta(cfg.meta_path);
    if (meta.header.prompt_dim != prefs.header.prompt_dim ||
        meta.header.response_dim != prefs.header.response_dim) {
      throw DataError("meta dataset dimensions do not match the preference dataset");
    }
  }

  cfg.model.prompt_dim = prefs.header.prompt_dim;
  cfg.model.response_dim = prefs.header.response_dim;
  const RewardModel model(cfg.model);

  std::size_t n_val = std::size_t(std::llround(cfg.val_fraction * double(prefs.pairs.size())));
  if (n_val >= prefs.pairs.size()) n_val = prefs.pairs.size() - 1;
  const std::span<const PreferencePair> train_view(prefs.pairs.data(),
                                                   prefs.pairs.size() - n_val);
  const std::span<const PreferencePair> val_view(
      prefs.pairs.data() + (prefs.pairs.size() - n_val), n_val);

  const fs::path out(args.out_dir);
  prepare_out_dir(out, args.force);

  const TrainResult result =
      train(model, cfg.mode, train_view, meta.samples, cfg.train, val_view);

  CheckpointMeta ckpt_meta;
  ckpt_meta.seed = cfg.train.seed;
  ckpt_meta.mode = train_mode_name(cfg.mode);
  ckpt_meta.steps = int(result.trace.size());
  save_checkpoint(out / "rm.ckpt", cfg.model, result.params, ckpt_meta);

  CsvWriter trace(out / "trace.csv",
                  {"step", "vanilla_loss", "diff_value", "diff_value_adapted", "val_accuracy",
                   "grad_norm_vanilla", "grad_norm_diff", "grad_dot", "clipped"});
  for (const StepTrace& t : result.trace) {
    trace.write_row({std::to_string(t.step), format_double(t.vanilla_loss),
                     format_double(t.diff_value), format_double(t.diff_value_adapted),
                     format_double(t.val_accuracy), format_double(t.grad_norm_vanilla),
                     format_double(t.grad_norm_diff), format_double(t.grad_dot),
                     t.clipped ? "1" : "0"});
  }
  write_text_file(out / "config.json", canonical_train_config(cfg));

  release_out_dir(out);
  const StepTrace& last = result.trace.back();
  std::cout << "trained " << result.trace.size() << " steps (" << train_mode_name(cfg.mode)
            << "); final loss " << format_double(last.vanilla_loss) << ", accuracy "
            << format_double(last.val_accuracy) << "\n";
}

void cmd_iterate(const CommonArgs& args, const std::string& mode_override) {
  ExperimentPlan plan = parse_plan(read_text_file(args.config_path));
  if (args.seed) plan.seed = *args.seed;
  if (!mode_override.empty()) plan.rm_modes = {parse_rm_mode(mode_override)};
  plan.validate();

  const fs::path out(args.out_dir);
  prepare_out_dir(out, args.force);
  const ExperimentResult result = run_experiment(plan, out);
  release_out_dir(out);

  for (const RoundArtifacts& round : result.rounds) {
    std::cout << "round " << round.metrics.round << ": win "
              << format_double(round.metrics.win_rate) << ", tie "
              << format_double(round.metrics.tie_rate) << ", accuracy "
              << format_double(round.metrics.val_accuracy) << ", diff variance "
              << format_double(round.metrics.diff_variance) << "\n";
  }
}

void cmd_probe_alignment(const CommonArgs& args) {
  ProbeConfig cfg = parse_probe_config(read_text_file(args.config_path));
  if (args.seed) cfg.env.seed = *args.seed;
  cfg.validate();

  const fs::path out(args.out_dir);
  prepare_out_dir(out, args.force);

  const OracleReward oracle = OracleReward::make(cfg.oracle_kind, cfg.env.prompt_dim,
                                                 cfg.env.response_dim, cfg.oracle_seed);
  const GaussianPolicy policy =
      GaussianPolicy::make(cfg.env.prompt_dim, cfg.env.response_dim, cfg.policy_sigma,
                           cfg.policy_init_scale, cfg.policy_seed);
  const auto pairs = sample_preferences(cfg.env, oracle, policy, cfg.pair_count);
  const auto meta = sample_meta(cfg.env, policy, cfg.meta_count, cfg.meta_k);

  const RewardModel model(cfg.model);
  const ParamVector params = model.init_params();
  DiffLossOptions opts;
  opts.exact_pair_mean = cfg.exact_pair_mean;
  const AlignmentProbeReport report =
      alignment_probe(model, params, pairs, meta, cfg.etas, opts);

  CsvWriter csv(out / "alignment.csv", {"eta", "mean_residual", "sign_agreement"});
  for (std::size_t i = 0; i < report.etas.size(); ++i) {
    csv.write_row({format_double(report.etas[i]), format_double(report.mean_residuals[i]),
                   format_double(report.sign_agreement[i])});
  }

  nlohmann::json j;
  j["etas"] = report.etas;
  j["batch_dot"] = report.batch_dot;
  j["pair_dots"] = report.pair_dots;
  j["residuals"] = report.residuals;
  j["loss_deltas"] = report.loss_deltas;
  j["mean_residuals"] = report.mean_residuals;
  j["sign_agreement"] = report.sign_agreement;
  write_text_file(out / "alignment.json", j.dump(2) + "\n");
  write_text_file(out / "config.json", canonical_probe_config(cfg));

  release_out_dir(out);
  for (std::size_t i = 0; i < report.etas.size(); ++i) {
    std::cout << "eta " << format_double(report.etas[i]) << ": mean residual "
              << format_double(report.mean_residuals[i]) << ", sign agreement "
              << format_double(report.sign_agreement[i]) << "\n";
  }
}

double cell_to_double(const CsvTable& table, std::size_t row, int col, const fs::path& file) {
  if (col < 0 || row >= table.rows.size()) {
    throw DataError("malformed table in " + file.string());
  }
  try {
    return std::stod(table.rows[row][std::size_t(col)]);
  } catch (const std::exception&) {
    throw DataError("non-numeric cell in " + file.string());
  }
}

void cmd_report(const std::string& out_dir) {
  const fs::path dir(out_dir);
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  if (fs::exists(dir / ".lock")) {
    throw IoError(dir.string() + " holds a lock from an unfinished run");
  }
  const fs::path metrics_path = dir / "metrics.csv";
  const CsvTable metrics = read_csv(metrics_path);
  const int col_round = metrics.column("round");
  const int col_win = metrics.column("win_rate");
  const int col_tie = metrics.column("tie_rate");
  const int col_acc = metrics.column("val_accuracy");
  const int col_var = metrics.column("diff_variance");
  if (col_round < 0 || col_win < 0 || col_tie < 0 || col_acc < 0 || col_var < 0) {
    throw DataError("missing metrics columns in " + metrics_path.string());
  }

  const fs::path report_dir = dir / "report";
  std::error_code ec;
  fs::create_directories(report_dir, ec);
  if (ec) throw IoError("cannot create " + report_dir.string() + ": " + ec.message());

  CsvWriter trajectory(report_dir / "variance_trajectory.csv", {"round", "diff_variance"});
  CsvWriter accuracy(report_dir / "accuracy.csv", {"round", "val_accuracy"});
  nlohmann::json histograms = nlohmann::json::array();

  std::cout << "round      win      tie     lose  val_acc  diff_var\n";
  for (std::size_t r = 0; r < metrics.rows.size(); ++r) {
    const double round = cell_to_double(metrics, r, col_round, metrics_path);
    const double win = cell_to_double(metrics, r, col_win, metrics_path);
    const double tie = cell_to_double(metrics, r, col_tie, metrics_path);
    const double acc = cell_to_double(metrics, r, col_acc, metrics_path);
    const double var = cell_to_double(metrics, r, col_var, metrics_path);
    trajectory.write_row({std::to_string(int(round)), format_double(var)});
    accuracy.write_row({std::to_string(int(round)), format_double(acc)});

    const fs::path diffs_path = dir / ("round_" + std::to_string(int(round))) / "diffs.csv";
    const CsvTable diffs_table = read_csv(diffs_path);
    const int col_diff = diffs_table.column("diff");
    if (col_diff < 0) throw DataError("missing diff column in " + diffs_path.string());
    std::vector<double> raw;
    raw.reserve(diffs_table.rows.size());
    for (std::size_t i = 0; i < diffs_table.rows.size(); ++i) {
      raw.push_back(cell_to_double(diffs_table, i, col_diff, diffs_path));
    }
    const DiffDistribution normalized = normalize_distribution(make_diff_distribution(raw));
    nlohmann::json h;
    h["round"] = int(round);
    h["bin_edges"] = normalized.bin_edges;
    h["counts"] = normalized.counts;
    h["variance"] = normalized.variance;
    histograms.push_back(h);

    char line[160];
    std::snprintf(line, sizeof(line), "%5d  %7.4f  %7.4f  %7.4f  %7.4f  %8.5f\n", int(round),
                  win, tie, 1.0 - win - tie, acc, var);
    std::cout << line;
  }
  write_text_file(report_dir / "normalized_histograms.json", histograms.dump(2) + "\n");
}

int run(int argc, char** argv) {
  CLI::App app{"synthetic preference-data experiments: reward-model training that keeps "
               "response-distinguishing ability under policy distribution shift"};
  app.require_subcommand(1);

  CommonArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen-data", "sample preference and meta datasets");
  add_common(gen, gen_args);

  CommonArgs train_args;
  std::string train_mode;
  CLI::App* train_cmd = app.add_subcommand("train", "train a reward model on datasets");
  add_common(train_cmd, train_args);
  train_cmd->add_option("-m,--mode", train_mode, "training mode")
      ->check(CLI::IsMember({"vanilla", "metarm"}));

  CommonArgs iter_args;
  std::string iter_mode;
  CLI::App* iter = app.add_subcommand("iterate", "run a multi-round policy/RM experiment");
  add_common(iter, iter_args);
  iter->add_option("-m,--mode", iter_mode, "reward-model mode for every round")
      ->check(CLI::IsMember({"vanilla", "metarm", "frozen"}));

  CommonArgs probe_args;
  CLI::App* probe =
      app.add_subcommand("probe-alignment", "first-order check of the inner ascent step");
  add_common(probe, probe_args);

  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "summarize an experiment directory");
  report->add_option("-o,--out", report_dir, "experiment directory to summarize")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) cmd_gen_data(gen_args);
    if (train_cmd->parsed()) cmd_train(train_args, train_mode);
    if (iter->parsed()) cmd_iterate(iter_args, iter_mode);
    if (probe->parsed()) cmd_probe_alignment(probe_args);
    if (report->parsed()) cmd_report(report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
