#include "metarm/checkpoint.hpp"

#include <bit>
#include <cstddef>
#include <fstream>

#include "json.hpp"

#include "metarm/errors.hpp"

namespace metarm {

namespace {

constexpr char kMagic[4] = {'M', 'R', 'M', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(char((bits >> (8 * i)) & 0xff));
}

std::uint32_t take_u32(const std::string& buf, std::size_t& pos, const std::string& path) {
  if (pos + 4 > buf.size()) throw DataError("truncated checkpoint: " + path);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= std::uint32_t(static_cast<unsigned char>(buf[pos + std::size_t(i)])) << (8 * i);
  }
  pos += 4;
  return v;
}

double take_f64(const std::string& buf, std::size_t& pos) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= std::uint64_t(static_cast<unsigned char>(buf[pos + std::size_t(i)])) << (8 * i);
  }
  pos += 8;
  return std::bit_cast<double>(bits);
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelSpec& spec,
                     const ParamVector& params, const CheckpointMeta& meta) {
  spec.validate();
  if (params.size() != std::size_t(spec.param_count()) || params.layout != spec.layers()) {
    throw ShapeError("save_checkpoint: parameters do not match the model spec");
  }
  std::string blob;
  blob.reserve(64 + params.size() * 8);
  blob.append(kMagic, 4);
  put_u32(blob, std::uint32_t(spec.prompt_dim));
  put_u32(blob, std::uint32_t(spec.response_dim));
  put_u32(blob, std::uint32_t(spec.hidden_dims.size()));
  for (int w : spec.hidden_dims) put_u32(blob, std::uint32_t(w));
  put_u32(blob, spec.activation == Activation::kTanh ? 0u : 1u);
  for (double v : params.values) put_f64(blob, v);

  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(blob.data(), std::streamsize(blob.size()));
    if (!out) throw IoError("write failed: " + path.string());
  }

  nlohmann::json side;
  side["model_seed"] = spec.seed;
  side["seed"] = meta.seed;
  side["mode"] = meta.mode;
  side["steps"] = meta.steps;
  side["note"] = meta.note;
  std::ofstream out(sidecar_path(path), std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + sidecar_path(path).string() + " for writing");
  out << side.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + sidecar_path(path).string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const std::string name = path.string();
  if (blob.size() < 4 || blob.compare(0, 4, kMagic, 4) != 0) {
    throw DataError("not a checkpoint (bad magic): " + name);
  }
  std::size_t pos = 4;
  LoadedCheckpoint loaded;
  loaded.spec.prompt_dim = int(take_u32(blob, pos, name));
  loaded.spec.response_dim = int(take_u32(blob, pos, name));
  const std::uint32_t hidden_count = take_u32(blob, pos, name);
  if (hidden_count > 1024) throw DataError("implausible checkpoint header: " + name);
  loaded.spec.hidden_dims.clear();
  for (std::uint32_t i = 0; i < hidden_count; ++i) {
    loaded.spec.hidden_dims.push_back(int(take_u32(blob, pos, name)));
  }
  const std::uint32_t act = take_u32(blob, pos, name);
  if (act > 1) throw DataError("unknown activation code in checkpoint: " + name);
  loaded.spec.activation = act == 0 ? Activation::kTanh : Activation::kRelu;
  loaded.spec.validate();

  const std::size_t count = loaded.spec.param_count();
  if (blob.size() - pos != count * 8) {
    throw DataError("checkpoint parameter block has wrong size: " + name);
  }
  loaded.params.layout = loaded.spec.layers();
  loaded.params.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) loaded.params.values[i] = take_f64(blob, pos);

  const auto side_path = sidecar_path(path);
  if (std::filesystem::exists(side_path)) {
    std::ifstream side_in(side_path, std::ios::binary);
    if (!side_in) throw IoError("cannot open " + side_path.string());
    std::string text((std::istreambuf_iterator<char>(side_in)), std::istreambuf_iterator<char>());
    nlohmann::json side;
    try {
      side = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("malformed checkpoint sidecar " + side_path.string() + ": " + e.what());
    }
    loaded.spec.seed = side.value("model_seed", std::uint64_t(0));
    loaded.meta.seed = side.value("seed", std::uint64_t(0));
    loaded.meta.mode = side.value("mode", std::string());
    loaded.meta.steps = side.value("steps", 0);
    loaded.meta.note = side.value("note", std::string());
  }
  return loaded;
}

}  // namespace metarm
