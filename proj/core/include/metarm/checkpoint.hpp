#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "metarm/model.hpp"

namespace metarm {

// Training provenance carried beside the binary weights.
struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::string mode;
  int steps = 0;
  std::string note;
};

struct LoadedCheckpoint {
  ModelSpec spec;
  ParamVector params;
  CheckpointMeta meta;
};

// Binary layout: magic "MRM1"; little-endian u32 prompt_dim, response_dim,
// hidden layer count, each hidden width, activation code (0 tanh, 1 relu);
// then the parameter values as raw little-endian f64. A JSON sidecar at
// <path>.json carries the model seed and CheckpointMeta.
void save_checkpoint(const std::filesystem::path& path, const ModelSpec& spec,
                     const ParamVector& params, const CheckpointMeta& meta = {});

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace metarm
