#include "metarm/dataset_io.hpp"

#include <fstream>

#include "json.hpp"

#include "metarm/errors.hpp"

namespace metarm {

namespace {

using nlohmann::json;

json header_json(const DatasetHeader& header) {
  json j;
  j["kind"] = header.kind;
  j["config_hash"] = header.config_hash;
  j["seed"] = header.seed;
  j["count"] = header.count;
  j["prompt_dim"] = header.prompt_dim;
  j["response_dim"] = header.response_dim;
  return j;
}

DatasetHeader parse_header(const std::string& line, const std::string& path,
                           const std::string& expected_kind) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError("malformed dataset header in " + path + ": " + e.what());
  }
  DatasetHeader header;
  header.kind = j.value("kind", std::string());
  if (header.kind != expected_kind) {
    throw DataError("dataset " + path + " has kind '" + header.kind + "', expected '" +
                    expected_kind + "'");
  }
  header.config_hash = j.value("config_hash", std::string());
  header.seed = j.value("seed", std::uint64_t(0));
  header.count = j.value("count", 0);
  header.prompt_dim = j.value("prompt_dim", 0);
  header.response_dim = j.value("response_dim", 0);
  if (header.count < 1 || header.prompt_dim < 1 || header.response_dim < 1) {
    throw DataError("dataset header in " + path + " has non-positive sizes");
  }
  return header;
}

std::vector<double> parse_vector(const json& j, int expected_dim, const std::string& path,
                                 std::size_t line_no, const char* field) {
  if (!j.is_array()) {
    throw DataError(path + " line " + std::to_string(line_no) + ": " + field +
                    " is not an array");
  }
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number()) {
      throw DataError(path + " line " + std::to_string(line_no) + ": " + field +
                      " has a non-numeric entry");
    }
    v.push_back(e.get<double>());
  }
  if (int(v.size()) != expected_dim) {
    throw DataError(path + " line " + std::to_string(line_no) + ": " + field +
                    " has wrong dimension");
  }
  return v;
}

json line_json(const std::string& line, const std::string& path, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
  }
}

const json& require_field(const json& j, const char* key, const std::string& path,
                          std::size_t line_no) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw DataError(path + " line " + std::to_string(line_no) + ": missing field '" + key + "'");
  }
  return *it;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

void save_preferences(const std::filesystem::path& path, std::span<const PreferencePair> pairs,
                      const std::string& config_hash, std::uint64_t seed) {
  if (pairs.empty()) throw DataError("save_preferences: no pairs");
  DatasetHeader header;
  header.kind = "preferences";
  header.config_hash = config_hash;
  header.seed = seed;
  header.count = int(pairs.size());
  header.prompt_dim = int(pairs.front().prompt.size());
  header.response_dim = int(pairs.front().winner.size());
  auto out = open_out(path);
  out << header_json(header).dump() << '\n';
  for (const auto& pair : pairs) {
    json j;
    j["prompt"] = pair.prompt;
    j["winner"] = pair.winner;
    j["loser"] = pair.loser;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void save_meta(const std::filesystem::path& path, std::span<const MetaSample> samples,
               const std::string& config_hash, std::uint64_t seed) {
  if (samples.empty()) throw DataError("save_meta: no samples");
  DatasetHeader header;
  header.kind = "meta";
  header.config_hash = config_hash;
  header.seed = seed;
  header.count = int(samples.size());
  header.prompt_dim = int(samples.front().prompt.size());
  header.response_dim =
      samples.front().responses.empty() ? 0 : int(samples.front().responses.front().size());
  auto out = open_out(path);
  out << header_json(header).dump() << '\n';
  for (const auto& sample : samples) {
    json j;
    j["prompt"] = sample.prompt;
    j["responses"] = sample.responses;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

PreferenceDataset load_preferences(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string name = path.string();
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset file: " + name);
  PreferenceDataset dataset;
  dataset.header = parse_header(line, name, "preferences");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = line_json(line, name, line_no);
    PreferencePair pair;
    pair.prompt = parse_vector(require_field(j, "prompt", name, line_no),
                               dataset.header.prompt_dim, name, line_no, "prompt");
    pair.winner = parse_vector(require_field(j, "winner", name, line_no),
                               dataset.header.response_dim, name, line_no, "winner");
    pair.loser = parse_vector(require_field(j, "loser", name, line_no),
                              dataset.header.response_dim, name, line_no, "loser");
    dataset.pairs.push_back(std::move(pair));
  }
  if (int(dataset.pairs.size()) != dataset.header.count) {
    throw DataError("dataset " + name + " record count does not match its header");
  }
  return dataset;
}

MetaDataset load_meta(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string name = path.string();
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset file: " + name);
  MetaDataset dataset;
  dataset.header = parse_header(line, name, "meta");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = line_json(line, name, line_no);
    MetaSample sample;
    sample.prompt = parse_vector(require_field(j, "prompt", name, line_no),
                                 dataset.header.prompt_dim, name, line_no, "prompt");
    const auto& responses = require_field(j, "responses", name, line_no);
    if (!responses.is_array() || responses.size() < 2) {
      throw DataError(name + " line " + std::to_string(line_no) +
                      ": responses must hold at least two entries");
    }
    for (const auto& r : responses) {
      sample.responses.push_back(
          parse_vector(r, dataset.header.response_dim, name, line_no, "response"));
    }
    dataset.samples.push_back(std::move(sample));
  }
  if (int(dataset.samples.size()) != dataset.header.count) {
    throw DataError("dataset " + name + " record count does not match its header");
  }
  return dataset;
}

}  // namespace metarm
