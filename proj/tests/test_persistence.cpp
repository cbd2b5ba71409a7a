#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "metarm/checkpoint.hpp"
#include "metarm/config.hpp"
#include "metarm/csv.hpp"
#include "metarm/dataset_io.hpp"
#include "metarm/errors.hpp"
#include "metarm/model.hpp"
#include "metarm/rng.hpp"

using namespace metarm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path = fs::temp_directory_path() /
           ("metarm_persist_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

double reparse(const std::string& text) { return std::strtod(text.c_str(), nullptr); }

std::vector<PreferencePair> some_pairs(int count) {
  Rng rng(77);
  std::vector<PreferencePair> pairs(static_cast<std::size_t>(count));
  for (auto& pair : pairs) {
    pair.prompt = {rng.normal(), rng.normal(), rng.normal()};
    pair.winner = {rng.normal(), rng.normal()};
    pair.loser = {rng.normal(), rng.normal()};
  }
  return pairs;
}

std::vector<MetaSample> some_meta(int count, int k) {
  Rng rng(78);
  std::vector<MetaSample> meta(static_cast<std::size_t>(count));
  for (auto& sample : meta) {
    sample.prompt = {rng.normal(), rng.normal(), rng.normal()};
    sample.responses.resize(static_cast<std::size_t>(k));
    for (auto& r : sample.responses) r = {rng.normal(), rng.normal()};
  }
  return meta;
}

}  // namespace

TEST_CASE("format_double survives a parse round trip at the extremes") {
  const std::vector<double> values{0.0,
                                   -0.0,
                                   1.0,
                                   0.1,
                                   1.0 / 3.0,
                                   -1.2345678901234567e-8,
                                   1e-300,
                                   5e-324,
                                   1.7976931348623157e308,
                                   -2.2250738585072014e-308};
  for (double v : values) {
    const std::string s = format_double(v);
    const double back = reparse(s);
    CHECK(std::signbit(back) == std::signbit(v));
    CHECK(back == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("csv write and read round trip") {
  TempDir tmp;
  const fs::path file = tmp.path / "table.csv";
  {
    CsvWriter writer(file, {"round", "value"});
    writer.write_row({"0", format_double(1.0 / 3.0)});
    writer.write_row({"1", format_double(-2.5e-13)});
    CHECK_THROWS_AS(writer.write_row({"only-one"}), IoError);
  }
  const CsvTable table = read_csv(file);
  REQUIRE(table.header == std::vector<std::string>{"round", "value"});
  REQUIRE(table.rows.size() == 2);
  CHECK(table.column("value") == 1);
  CHECK(table.column("missing") == -1);
  CHECK(reparse(table.rows[0][1]) == 1.0 / 3.0);
  CHECK(reparse(table.rows[1][1]) == -2.5e-13);

  SUBCASE("errors") {
    CHECK_THROWS_AS(read_csv(tmp.path / "absent.csv"), IoError);
    const fs::path ragged = tmp.path / "ragged.csv";
    write_text_file(ragged, "a,b\n1\n");
    CHECK_THROWS_AS(read_csv(ragged), DataError);
    const fs::path empty = tmp.path / "empty.csv";
    write_text_file(empty, "");
    CHECK_THROWS_AS(read_csv(empty), DataError);
  }
  SUBCASE("carriage returns and blank lines are tolerated") {
    const fs::path crlf = tmp.path / "crlf.csv";
    write_text_file(crlf, "a,b\r\n1,2\r\n\n");
    const CsvTable t = read_csv(crlf);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][1] == "2");
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  TempDir tmp;
  ModelSpec spec;
  spec.prompt_dim = 3;
  spec.response_dim = 2;
  spec.hidden_dims = {4, 3};
  spec.activation = Activation::kRelu;
  spec.seed = 99;
  RewardModel model(spec);
  ParamVector params = model.init_params();
  Rng noise(1);
  for (auto& v : params.values) v += noise.normal() * 1e-3;
  params.values[0] = 1e-300;
  params.values[1] = -5e-324;

  CheckpointMeta meta;
  meta.seed = 1234;
  meta.mode = "metarm";
  meta.steps = 77;
  meta.note = "round 3";

  const fs::path file = tmp.path / "rm.ckpt";
  save_checkpoint(file, spec, params, meta);
  const LoadedCheckpoint loaded = load_checkpoint(file);
  CHECK(loaded.spec.prompt_dim == 3);
  CHECK(loaded.spec.response_dim == 2);
  CHECK(loaded.spec.hidden_dims == std::vector<int>{4, 3});
  CHECK(loaded.spec.activation == Activation::kRelu);
  CHECK(loaded.spec.seed == 99);
  CHECK(loaded.params.values == params.values);
  CHECK(loaded.params.layout == params.layout);
  CHECK(loaded.meta.seed == 1234);
  CHECK(loaded.meta.mode == "metarm");
  CHECK(loaded.meta.steps == 77);
  CHECK(loaded.meta.note == "round 3");

  SUBCASE("missing sidecar leaves default meta") {
    fs::remove(file.string() + ".json");
    const LoadedCheckpoint bare = load_checkpoint(file);
    CHECK(bare.params.values == params.values);
    CHECK(bare.meta.mode.empty());
  }
  SUBCASE("corrupt sidecar is an error") {
    write_text_file(file.string() + ".json", "{not json");
    CHECK_THROWS_AS(load_checkpoint(file), DataError);
  }
  SUBCASE("bad magic") {
    const fs::path bad = tmp.path / "bad.ckpt";
    write_text_file(bad, "XXXXgarbage");
    CHECK_THROWS_AS(load_checkpoint(bad), DataError);
  }
  SUBCASE("truncated parameter block") {
    std::ifstream in(file, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const fs::path cut = tmp.path / "cut.ckpt";
    std::ofstream out(cut, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
    out.close();
    fs::remove(cut.string() + ".json");
    CHECK_THROWS_AS(load_checkpoint(cut), DataError);
  }
  SUBCASE("shape mismatch on save") {
    ParamVector short_params = params;
    short_params.values.pop_back();
    CHECK_THROWS_AS(save_checkpoint(tmp.path / "short.ckpt", spec, short_params), ShapeError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint(tmp.path / "absent.ckpt"), IoError);
  }
}

TEST_CASE("preference dataset round trip") {
  TempDir tmp;
  const auto pairs = some_pairs(5);
  const fs::path file = tmp.path / "prefs.jsonl";
  save_preferences(file, pairs, "deadbeef00000000", 42);

  const PreferenceDataset loaded = load_preferences(file);
  CHECK(loaded.header.kind == "preferences");
  CHECK(loaded.header.config_hash == "deadbeef00000000");
  CHECK(loaded.header.seed == 42);
  CHECK(loaded.header.count == 5);
  CHECK(loaded.header.prompt_dim == 3);
  CHECK(loaded.header.response_dim == 2);
  REQUIRE(loaded.pairs.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(loaded.pairs[i].prompt == pairs[i].prompt);
    CHECK(loaded.pairs[i].winner == pairs[i].winner);
    CHECK(loaded.pairs[i].loser == pairs[i].loser);
  }
}

TEST_CASE("meta dataset round trip") {
  TempDir tmp;
  const auto meta = some_meta(4, 3);
  const fs::path file = tmp.path / "meta.jsonl";
  save_meta(file, meta, "cafe000000000000", 7);

  const MetaDataset loaded = load_meta(file);
  CHECK(loaded.header.kind == "meta");
  CHECK(loaded.header.count == 4);
  REQUIRE(loaded.samples.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(loaded.samples[i].prompt == meta[i].prompt);
    CHECK(loaded.samples[i].responses == meta[i].responses);
  }

  SUBCASE("kind mismatch is rejected") {
    CHECK_THROWS_AS(load_preferences(file), DataError);
  }
}

TEST_CASE("malformed dataset lines are reported with their location") {
  TempDir tmp;
  const fs::path file = tmp.path / "broken.jsonl";

  SUBCASE("missing field") {
    write_text_file(file,
                    R"({"kind":"preferences","config_hash":"x","seed":0,"count":1,"prompt_dim":2,"response_dim":1})"
                    "\n"
                    R"({"prompt":[0.0,0.0],"winner":[1.0]})"
                    "\n");
    try {
      load_preferences(file);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string what = e.what();
      CHECK(what.find("loser") != std::string::npos);
      CHECK(what.find("line 2") != std::string::npos);
    }
  }
  SUBCASE("wrong record dimension") {
    write_text_file(file,
                    R"({"kind":"preferences","config_hash":"x","seed":0,"count":1,"prompt_dim":2,"response_dim":1})"
                    "\n"
                    R"({"prompt":[0.0],"winner":[1.0],"loser":[0.0]})"
                    "\n");
    CHECK_THROWS_AS(load_preferences(file), DataError);
  }
  SUBCASE("count mismatch") {
    write_text_file(file,
                    R"({"kind":"preferences","config_hash":"x","seed":0,"count":2,"prompt_dim":2,"response_dim":1})"
                    "\n"
                    R"({"prompt":[0.0,0.0],"winner":[1.0],"loser":[0.0]})"
                    "\n");
    CHECK_THROWS_AS(load_preferences(file), DataError);
  }
  SUBCASE("meta sample with one response") {
    write_text_file(file,
                    R"({"kind":"meta","config_hash":"x","seed":0,"count":1,"prompt_dim":1,"response_dim":1})"
                    "\n"
                    R"({"prompt":[0.0],"responses":[[1.0]]})"
                    "\n");
    CHECK_THROWS_AS(load_meta(file), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_preferences(tmp.path / "nope.jsonl"), IoError);
  }
}

TEST_CASE("fnv1a matches the published test vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("text file helpers") {
  TempDir tmp;
  const fs::path file = tmp.path / "note.txt";
  write_text_file(file, "hello\nworld\n");
  CHECK(read_text_file(file) == "hello\nworld\n");
  CHECK_THROWS_AS(read_text_file(tmp.path / "absent.txt"), IoError);
}

TEST_CASE("gen-data config parses defaults and rejects junk") {
  const GenDataConfig config = parse_gen_data_config("{}");
  CHECK(config.env.prompt_dim == 8);
  CHECK(config.env.response_dim == 8);
  CHECK(config.env.beta == 5.0);
  CHECK(config.pair_count == 2000);
  CHECK(config.meta_k == 16);
  CHECK_NOTHROW(config.validate());

  CHECK_THROWS_AS(parse_gen_data_config("{nope"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_gen_data_config(R"({"bogus": 1})"),
                       doctest::Contains("unknown key"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_gen_data_config(R"({"env": {"bogus": 1}})"),
                       doctest::Contains("env.bogus"), ConfigError);
  CHECK_THROWS_AS(parse_gen_data_config(R"({"pair_count": -1})"), ConfigError);

  const GenDataConfig custom = parse_gen_data_config(
      R"({"env": {"prompt_dim": 4, "response_dim": 3, "label_mode": "deterministic",
           "ood": {"mean": [1, 1, 1, 1], "sigma": 0.5}},
          "oracle": {"kind": "mlp", "seed": 9}, "pair_count": 10})");
  CHECK(custom.env.prompt_dim == 4);
  CHECK(custom.env.label_mode == LabelMode::kDeterministic);
  REQUIRE(custom.env.ood.has_value());
  CHECK(custom.env.ood->sigma == 0.5);
  CHECK(custom.oracle_kind == OracleReward::Kind::kMlp);
  CHECK(custom.oracle_seed == 9);
  CHECK(custom.pair_count == 10);
}

TEST_CASE("canonical forms parse back to themselves") {
  SUBCASE("plan") {
    const ExperimentPlan plan = parse_plan("{}");
    const std::string canon = canonical_plan(plan);
    const ExperimentPlan again = parse_plan(canon);
    CHECK(canonical_plan(again) == canon);
    CHECK(fnv1a_hex(canon) == fnv1a_hex(canonical_plan(again)));
  }
  SUBCASE("gen-data") {
    const GenDataConfig config =
        parse_gen_data_config(R"({"env": {"prompt_dim": 3, "response_dim": 2}})");
    const std::string canon = canonical_gen_data_config(config);
    CHECK(canonical_gen_data_config(parse_gen_data_config(canon)) == canon);
  }
  SUBCASE("probe") {
    const ProbeConfig config = parse_probe_config("{}");
    const std::string canon = canonical_probe_config(config);
    CHECK(canonical_probe_config(parse_probe_config(canon)) == canon);
  }
  SUBCASE("train") {
    const TrainJobConfig config =
        parse_train_config(R"({"data": {"preferences": "prefs.jsonl"}, "mode": "vanilla"})");
    const std::string canon = canonical_train_config(config);
    CHECK(canonical_train_config(parse_train_config(canon)) == canon);
  }
}

TEST_CASE("plan parsing covers modes and nested sections") {
  const ExperimentPlan plan = parse_plan(R"({
    "rounds": 3,
    "rm_mode": ["vanilla", "metarm", "frozen"],
    "seed": 11,
    "env": {"prompt_dim": 5, "response_dim": 4},
    "train": {"eta": 0.01, "optimizer": "adam"},
    "data": {"pair_count": 100, "meta_prompts": "reuse_d"},
    "improve": {"k": 4}
  })");
  CHECK(plan.rounds == 3);
  REQUIRE(plan.rm_modes.size() == 3);
  CHECK(plan.rm_modes[0] == RmMode::kVanilla);
  CHECK(plan.rm_modes[2] == RmMode::kFrozen);
  CHECK(plan.mode_for_round(0) == RmMode::kVanilla);
  CHECK(plan.mode_for_round(2) == RmMode::kFrozen);
  CHECK_THROWS_AS(plan.mode_for_round(3), ConfigError);
  CHECK(plan.seed == 11);
  CHECK(plan.env.prompt_dim == 5);
  CHECK(plan.model.prompt_dim == 5);  // model dims follow the env
  CHECK(plan.train.eta == 0.01);
  CHECK(plan.train.optimizer == OuterOptimizer::kAdam);
  CHECK(plan.data.pair_count == 100);
  CHECK(plan.data.meta_prompts == MetaPromptSource::kReuseD);
  CHECK(plan.improve.k == 4);
  CHECK_NOTHROW(plan.validate());

  const ExperimentPlan single = parse_plan(R"({"rm_mode": "metarm", "rounds": 4})");
  REQUIRE(single.rm_modes.size() == 1);
  CHECK(single.rm_modes[0] == RmMode::kMetarm);
  CHECK(single.mode_for_round(3) == RmMode::kMetarm);  // sole entry broadcasts

  CHECK_THROWS_AS(parse_plan(R"({"rm_mode": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_plan(R"({"rm_mode": "sideways"})"), ConfigError);
  CHECK_THROWS_AS(parse_plan(R"({"rounds": 0})"), ConfigError);
}

TEST_CASE("train config parsing requires metarm inputs") {
  const TrainJobConfig config =
      parse_train_config(R"({"data": {"preferences": "p.jsonl"}})");
  CHECK(config.mode == TrainMode::kVanilla);
  CHECK(config.preferences_path == "p.jsonl");
  CHECK(config.val_fraction == 0.2);

  CHECK_THROWS_WITH_AS(
      parse_train_config(R"({"mode": "metarm", "data": {"preferences": "p.jsonl"}})"),
      doctest::Contains("data.meta"), ConfigError);
  CHECK_NOTHROW(parse_train_config(
      R"({"mode": "metarm", "data": {"preferences": "p.jsonl", "meta": "m.jsonl"}})"));
  CHECK_THROWS_AS(parse_train_config("{}"), ConfigError);
}

TEST_CASE("mode name round trips") {
  CHECK(parse_train_mode("vanilla") == TrainMode::kVanilla);
  CHECK(parse_train_mode("metarm") == TrainMode::kMetarm);
  CHECK_THROWS_AS(parse_train_mode("frozen"), ConfigError);
  CHECK(parse_rm_mode("frozen") == RmMode::kFrozen);
  CHECK(train_mode_name(TrainMode::kMetarm) == std::string("metarm"));
  CHECK(rm_mode_name(RmMode::kFrozen) == std::string("frozen"));
}
