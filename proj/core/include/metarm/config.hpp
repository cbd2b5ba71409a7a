#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "metarm/iterative_loop.hpp"
#include "metarm/meta_trainer.hpp"
#include "metarm/model.hpp"
#include "metarm/synthetic_env.hpp"

namespace metarm {

struct GenDataConfig {
  EnvConfig env;
  OracleReward::Kind oracle_kind = OracleReward::Kind::kBilinear;
  std::uint64_t oracle_seed = 0;
  double policy_sigma = 1.0;
  double policy_init_scale = 0.0;
  std::uint64_t policy_seed = 0;
  int pair_count = 2000;
  int meta_count = 256;
  int meta_k = 16;

  void validate() const;
};

struct TrainJobConfig {
  ModelSpec model;  // dims come from the dataset header
  TrainConfig train;
  TrainMode mode = TrainMode::kVanilla;
  std::string preferences_path;
  std::string meta_path;  // required in metarm mode
  double val_fraction = 0.2;

  void validate() const;
};

struct ProbeConfig {
  ModelSpec model;  // dims come from env
  EnvConfig env;
  OracleReward::Kind oracle_kind = OracleReward::Kind::kBilinear;
  std::uint64_t oracle_seed = 0;
  double policy_sigma = 1.0;
  double policy_init_scale = 0.0;
  std::uint64_t policy_seed = 0;
  int pair_count = 16;
  int meta_count = 16;
  int meta_k = 8;
  std::vector<double> etas = {1e-2, 5e-3, 2.5e-3, 1.25e-3};
  bool exact_pair_mean = false;

  void validate() const;
};

// Strict parsers: config files are JSON objects whose keys mirror the typed
// config fields one-to-one; unknown keys and type mismatches are errors.
GenDataConfig parse_gen_data_config(const std::string& text);
TrainJobConfig parse_train_config(const std::string& text);
ExperimentPlan parse_plan(const std::string& text);
ProbeConfig parse_probe_config(const std::string& text);

// Resolved configs (all defaults filled in) as deterministic sorted-key
// JSON, the form that gets hashed and written back as plan.json.
std::string canonical_gen_data_config(const GenDataConfig& config);
std::string canonical_train_config(const TrainJobConfig& config);
std::string canonical_plan(const ExperimentPlan& plan);
std::string canonical_probe_config(const ProbeConfig& config);

// FNV-1a 64-bit, hex encoded.
std::string fnv1a_hex(std::string_view bytes);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

TrainMode parse_train_mode(const std::string& name);
RmMode parse_rm_mode(const std::string& name);
const char* train_mode_name(TrainMode mode);

}  // namespace metarm
