#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "metarm/objectives.hpp"

namespace metarm {

// First line of every dataset file; records provenance for reruns.
struct DatasetHeader {
  std::string kind;  // "preferences" or "meta"
  std::string config_hash;
  std::uint64_t seed = 0;
  int count = 0;
  int prompt_dim = 0;
  int response_dim = 0;
};

struct PreferenceDataset {
  DatasetHeader header;
  std::vector<PreferencePair> pairs;
};

struct MetaDataset {
  DatasetHeader header;
  std::vector<MetaSample> samples;
};

// JSON-lines: the header object, then one record object per line.
void save_preferences(const std::filesystem::path& path, std::span<const PreferencePair> pairs,
                      const std::string& config_hash, std::uint64_t seed);
void save_meta(const std::filesystem::path& path, std::span<const MetaSample> samples,
               const std::string& config_hash, std::uint64_t seed);

PreferenceDataset load_preferences(const std::filesystem::path& path);
MetaDataset load_meta(const std::filesystem::path& path);

}  // namespace metarm
