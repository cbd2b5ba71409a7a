#include "metarm/config.hpp"

#include <fstream>
#include <initializer_list>

#include "json.hpp"

#include "metarm/errors.hpp"

namespace metarm {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + " " + what);
}

std::string sub(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("config: unknown key '" +
                        (path.empty() ? it.key() : path + "." + it.key()) + "'");
    }
  }
}

const json* find(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_num(const json& j, const char* key, double defv, const std::string& path) {
  const json* f = find(j, key);
  if (!f) return defv;
  if (!f->is_number()) bad(sub(path, key), "must be a number");
  return f->get<double>();
}

int get_int(const json& j, const char* key, int defv, const std::string& path) {
  const json* f = find(j, key);
  if (!f) return defv;
  if (!f->is_number_integer()) bad(sub(path, key), "must be an integer");
  return f->get<int>();
}

std::uint64_t get_u64(const json& j, const char* key, std::uint64_t defv,
                      const std::string& path) {
  const json* f = find(j, key);
  if (!f) return defv;
  if (!(f->is_number_unsigned() || (f->is_number_integer() && f->get<std::int64_t>() >= 0))) {
    bad(sub(path, key), "must be a non-negative integer");
  }
  return f->get<std::uint64_t>();
}

bool get_bool(const json& j, const char* key, bool defv, const std::string& path) {
  const json* f = find(j, key);
  if (!f) return defv;
  if (!f->is_boolean()) bad(sub(path, key), "must be a boolean");
  return f->get<bool>();
}

std::string get_str(const json& j, const char* key, const std::string& defv,
                    const std::string& path) {
  const json* f = find(j, key);
  if (!f) return defv;
  if (!f->is_string()) bad(sub(path, key), "must be a string");
  return f->get<std::string>();
}

std::vector<double> get_num_array(const json& f, const std::string& where) {
  if (!f.is_array()) bad(where, "must be an array of numbers");
  std::vector<double> v;
  v.reserve(f.size());
  for (const auto& e : f) {
    if (!e.is_number()) bad(where, "must be an array of numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

Activation parse_activation(const std::string& s, const std::string& where) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  bad(where, "must be \"tanh\" or \"relu\"");
}

const char* activation_name(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

OracleReward::Kind parse_oracle_kind(const std::string& s, const std::string& where) {
  if (s == "bilinear") return OracleReward::Kind::kBilinear;
  if (s == "mlp") return OracleReward::Kind::kMlp;
  bad(where, "must be \"bilinear\" or \"mlp\"");
}

const char* oracle_kind_name(OracleReward::Kind k) {
  return k == OracleReward::Kind::kBilinear ? "bilinear" : "mlp";
}

LabelMode parse_label_mode(const std::string& s, const std::string& where) {
  if (s == "bernoulli_bt") return LabelMode::kBernoulliBt;
  if (s == "deterministic") return LabelMode::kDeterministic;
  bad(where, "must be \"bernoulli_bt\" or \"deterministic\"");
}

const char* label_mode_name(LabelMode m) {
  return m == LabelMode::kBernoulliBt ? "bernoulli_bt" : "deterministic";
}

OuterOptimizer parse_optimizer(const std::string& s, const std::string& where) {
  if (s == "sgd") return OuterOptimizer::kSgd;
  if (s == "adam") return OuterOptimizer::kAdam;
  bad(where, "must be \"sgd\" or \"adam\"");
}

const char* optimizer_name(OuterOptimizer o) {
  return o == OuterOptimizer::kSgd ? "sgd" : "adam";
}

MetaPromptSource parse_meta_prompt_source(const std::string& s, const std::string& where) {
  if (s == "fresh") return MetaPromptSource::kFresh;
  if (s == "reuse_d") return MetaPromptSource::kReuseD;
  if (s == "ood") return MetaPromptSource::kOod;
  bad(where, "must be \"fresh\", \"reuse_d\", or \"ood\"");
}

json parse_root(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  return root;
}

void parse_model_section(const json& j, ModelSpec& spec, const std::string& path) {
  if (!j.is_object()) bad(path, "must be an object");
  check_keys(j, path, {"hidden_dims", "activation", "seed"});
  if (const json* f = find(j, "hidden_dims")) {
    if (!f->is_array()) bad(sub(path, "hidden_dims"), "must be an array of integers");
    spec.hidden_dims.clear();
    for (const auto& e : *f) {
      if (!e.is_number_integer()) bad(sub(path, "hidden_dims"), "must be an array of integers");
      spec.hidden_dims.push_back(e.get<int>());
    }
  }
  if (const json* f = find(j, "activation")) {
    if (!f->is_string()) bad(sub(path, "activation"), "must be a string");
    spec.activation = parse_activation(f->get<std::string>(), sub(path, "activation"));
  }
  spec.seed = get_u64(j, "seed", spec.seed, path);
}

void parse_train_section(const json& j, TrainConfig& cfg, const std::string& path) {
  if (!j.is_object()) bad(path, "must be an object");
  check_keys(j, path,
             {"eta", "alpha", "pref_batch", "meta_batch", "steps", "optimizer", "seed",
              "exact_pair_mean", "grad_clip", "adam_beta1", "adam_beta2", "adam_eps"});
  cfg.eta = get_num(j, "eta", cfg.eta, path);
  cfg.alpha = get_num(j, "alpha", cfg.alpha, path);
  cfg.pref_batch = get_int(j, "pref_batch", cfg.pref_batch, path);
  cfg.meta_batch = get_int(j, "meta_batch", cfg.meta_batch, path);
  cfg.steps = get_int(j, "steps", cfg.steps, path);
  if (const json* f = find(j, "optimizer")) {
    if (!f->is_string()) bad(sub(path, "optimizer"), "must be a string");
    cfg.optimizer = parse_optimizer(f->get<std::string>(), sub(path, "optimizer"));
  }
  cfg.seed = get_u64(j, "seed", cfg.seed, path);
  cfg.exact_pair_mean = get_bool(j, "exact_pair_mean", cfg.exact_pair_mean, path);
  cfg.grad_clip = get_num(j, "grad_clip", cfg.grad_clip, path);
  cfg.adam_beta1 = get_num(j, "adam_beta1", cfg.adam_beta1, path);
  cfg.adam_beta2 = get_num(j, "adam_beta2", cfg.adam_beta2, path);
  cfg.adam_eps = get_num(j, "adam_eps", cfg.adam_eps, path);
}

PromptDistribution parse_prompt_dist(const json& j, const PromptDistribution& defaults,
                                     const std::string& path) {
  if (!j.is_object()) bad(path, "must be an object");
  check_keys(j, path, {"mean", "sigma"});
  PromptDistribution dist = defaults;
  if (const json* f = find(j, "mean")) dist.mean = get_num_array(*f, sub(path, "mean"));
  dist.sigma = get_num(j, "sigma", dist.sigma, path);
  return dist;
}

void parse_env_section(const json& j, EnvConfig& env, const std::string& path) {
  if (!j.is_object()) bad(path, "must be an object");
  check_keys(j, path,
             {"prompt_dim", "response_dim", "prompts", "beta", "label_mode", "ood", "seed"});
  env.prompt_dim = get_int(j, "prompt_dim", env.prompt_dim, path);
  env.response_dim = get_int(j, "response_dim", env.response_dim, path);
  if (const json* f = find(j, "prompts")) {
    env.prompts = parse_prompt_dist(*f, env.prompts, sub(path, "prompts"));
  }
  env.beta = get_num(j, "beta", env.beta, path);
  if (const json* f = find(j, "label_mode")) {
    if (!f->is_string()) bad(sub(path, "label_mode"), "must be a string");
    env.label_mode = parse_label_mode(f->get<std::string>(), sub(path, "label_mode"));
  }
  if (const json* f = find(j, "ood")) {
    env.ood = parse_prompt_dist(*f, PromptDistribution{}, sub(path, "ood"));
  }
  env.seed = get_u64(j, "seed", env.seed, path);
}

struct PolicySection {
  double sigma = 1.0;
  double init_scale = 0.0;
  std::uint64_t seed = 0;
};

PolicySection parse_policy_section(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "must be an object");
  check_keys(j, path, {"sigma", "init_scale", "seed"});
  PolicySection p;
  p.sigma = get_num(j, "sigma", p.sigma, path);
  p.init_scale = get_num(j, "init_scale", p.init_scale, path);
  p.seed = get_u64(j, "seed", p.seed, path);
  return p;
}

void parse_oracle_section(const json& j, OracleReward::Kind& kind, std::uint64_t& seed,
                          const std::string& path) {
  if (!j.is_object()) bad(path, "must be an object");
  check_keys(j, path, {"kind", "seed"});
  if (const json* f = find(j, "kind")) {
    if (!f->is_string()) bad(sub(path, "kind"), "must be a string");
    kind = parse_oracle_kind(f->get<std::string>(), sub(path, "kind"));
  }
  seed = get_u64(j, "seed", seed, path);
}

void parse_data_section(const json& j, DataConfig& data, const std::string& path) {
  if (!j.is_object()) bad(path, "must be an object");
  check_keys(j, path, {"pair_count", "val_fraction", "meta_count", "meta_k", "meta_prompts"});
  data.pair_count = get_int(j, "pair_count", data.pair_count, path);
  data.val_fraction = get_num(j, "val_fraction", data.val_fraction, path);
  data.meta_count = get_int(j, "meta_count", data.meta_count, path);
  data.meta_k = get_int(j, "meta_k", data.meta_k, path);
  if (const json* f = find(j, "meta_prompts")) {
    if (!f->is_string()) bad(sub(path, "meta_prompts"), "must be a string");
    data.meta_prompts = parse_meta_prompt_source(f->get<std::string>(), sub(path, "meta_prompts"));
  }
}

void parse_improve_section(const json& j, ImproveConfig& cfg, const std::string& path) {
  if (!j.is_object()) bad(path, "must be an object");
  check_keys(j, path, {"k", "step_size", "contraction", "prompt_batch"});
  cfg.k = get_int(j, "k", cfg.k, path);
  cfg.step_size = get_num(j, "step_size", cfg.step_size, path);
  cfg.contraction = get_num(j, "contraction", cfg.contraction, path);
  cfg.prompt_batch = get_int(j, "prompt_batch", cfg.prompt_batch, path);
}

EnvConfig default_env() {
  EnvConfig env;
  env.prompt_dim = 8;
  env.response_dim = 8;
  env.prompts.sigma = 1.0;
  env.beta = 5.0;
  return env;
}

json prompt_dist_json(const PromptDistribution& dist) {
  json j;
  j["mean"] = dist.mean;
  j["sigma"] = dist.sigma;
  return j;
}

json env_json(const EnvConfig& env) {
  json j;
  j["prompt_dim"] = env.prompt_dim;
  j["response_dim"] = env.response_dim;
  j["prompts"] = prompt_dist_json(env.prompts);
  j["beta"] = env.beta;
  j["label_mode"] = label_mode_name(env.label_mode);
  if (env.ood) j["ood"] = prompt_dist_json(*env.ood);
  j["seed"] = env.seed;
  return j;
}

json model_json(const ModelSpec& spec) {
  json j;
  j["hidden_dims"] = spec.hidden_dims;
  j["activation"] = activation_name(spec.activation);
  j["seed"] = spec.seed;
  return j;
}

json train_json(const TrainConfig& cfg) {
  json j;
  j["eta"] = cfg.eta;
  j["alpha"] = cfg.alpha;
  j["pref_batch"] = cfg.pref_batch;
  j["meta_batch"] = cfg.meta_batch;
  j["steps"] = cfg.steps;
  j["optimizer"] = optimizer_name(cfg.optimizer);
  j["seed"] = cfg.seed;
  j["exact_pair_mean"] = cfg.exact_pair_mean;
  j["grad_clip"] = cfg.grad_clip;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  return j;
}

}  // namespace

void GenDataConfig::validate() const {
  env.validate();
  if (policy_sigma <= 0.0) throw ConfigError("config: policy.sigma must be positive");
  if (pair_count < 1) throw ConfigError("config: pair_count must be positive");
  if (meta_count < 1) throw ConfigError("config: meta_count must be positive");
  if (meta_k < 2) throw ConfigError("config: meta_k must be at least 2");
}

void ProbeConfig::validate() const {
  env.validate();
  if (policy_sigma <= 0.0) throw ConfigError("config: policy.sigma must be positive");
  if (pair_count < 1) throw ConfigError("config: pair_count must be positive");
  if (meta_count < 1) throw ConfigError("config: meta_count must be positive");
  if (meta_k < 2) throw ConfigError("config: meta_k must be at least 2");
  if (etas.empty()) throw ConfigError("config: etas must not be empty");
  for (double eta : etas) {
    if (!(eta > 0.0)) throw ConfigError("config: etas must all be positive");
  }
  ModelSpec spec = model;
  spec.prompt_dim = env.prompt_dim;
  spec.response_dim = env.response_dim;
  spec.validate();
}

void TrainJobConfig::validate() const {
  train.validate();
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw ConfigError("config: data.val_fraction must be in [0, 1)");
  }
  if (preferences_path.empty()) throw ConfigError("config: data.preferences is required");
  if (mode == TrainMode::kMetarm && meta_path.empty()) {
    throw ConfigError("config: data.meta is required in metarm mode");
  }
}

GenDataConfig parse_gen_data_config(const std::string& text) {
  const json root = parse_root(text);
  check_keys(root, "", {"env", "oracle", "policy", "pair_count", "meta_count", "meta_k"});
  GenDataConfig cfg;
  cfg.env = default_env();
  if (const json* f = find(root, "env")) parse_env_section(*f, cfg.env, "env");
  if (const json* f = find(root, "oracle")) {
    parse_oracle_section(*f, cfg.oracle_kind, cfg.oracle_seed, "oracle");
  }
  if (const json* f = find(root, "policy")) {
    const PolicySection p = parse_policy_section(*f, "policy");
    cfg.policy_sigma = p.sigma;
    cfg.policy_init_scale = p.init_scale;
    cfg.policy_seed = p.seed;
  }
  cfg.pair_count = get_int(root, "pair_count", cfg.pair_count, "");
  cfg.meta_count = get_int(root, "meta_count", cfg.meta_count, "");
  cfg.meta_k = get_int(root, "meta_k", cfg.meta_k, "");
  cfg.validate();
  return cfg;
}

TrainJobConfig parse_train_config(const std::string& text) {
  const json root = parse_root(text);
  check_keys(root, "", {"model", "train", "mode", "data"});
  TrainJobConfig cfg;
  cfg.model.hidden_dims = {16};
  if (const json* f = find(root, "model")) parse_model_section(*f, cfg.model, "model");
  if (const json* f = find(root, "train")) parse_train_section(*f, cfg.train, "train");
  if (const json* f = find(root, "mode")) {
    if (!f->is_string()) bad("mode", "must be a string");
    cfg.mode = parse_train_mode(f->get<std::string>());
  }
  if (const json* f = find(root, "data")) {
    if (!f->is_object()) bad("data", "must be an object");
    check_keys(*f, "data", {"preferences", "meta", "val_fraction"});
    cfg.preferences_path = get_str(*f, "preferences", cfg.preferences_path, "data");
    cfg.meta_path = get_str(*f, "meta", cfg.meta_path, "data");
    cfg.val_fraction = get_num(*f, "val_fraction", cfg.val_fraction, "data");
  }
  cfg.validate();
  return cfg;
}

ExperimentPlan parse_plan(const std::string& text) {
  const json root = parse_root(text);
  check_keys(root, "",
             {"rounds", "rm_mode", "warm_start", "seed", "model", "train", "env", "oracle",
              "policy", "data", "improve", "eval"});
  ExperimentPlan plan;
  plan.env = default_env();
  plan.model.hidden_dims = {16};
  plan.rounds = get_int(root, "rounds", plan.rounds, "");
  if (const json* f = find(root, "rm_mode")) {
    plan.rm_modes.clear();
    if (f->is_string()) {
      plan.rm_modes.push_back(parse_rm_mode(f->get<std::string>()));
    } else if (f->is_array()) {
      for (const auto& e : *f) {
        if (!e.is_string()) bad("rm_mode", "must be a string or array of strings");
        plan.rm_modes.push_back(parse_rm_mode(e.get<std::string>()));
      }
    } else {
      bad("rm_mode", "must be a string or array of strings");
    }
  }
  plan.warm_start = get_bool(root, "warm_start", plan.warm_start, "");
  plan.seed = get_u64(root, "seed", plan.seed, "");
  if (const json* f = find(root, "env")) parse_env_section(*f, plan.env, "env");
  if (const json* f = find(root, "model")) parse_model_section(*f, plan.model, "model");
  if (const json* f = find(root, "train")) parse_train_section(*f, plan.train, "train");
  if (const json* f = find(root, "oracle")) {
    parse_oracle_section(*f, plan.oracle_kind, plan.oracle_seed, "oracle");
  }
  if (const json* f = find(root, "policy")) {
    const PolicySection p = parse_policy_section(*f, "policy");
    plan.policy_sigma = p.sigma;
    plan.policy_init_scale = p.init_scale;
    plan.policy_seed = p.seed;
  }
  if (const json* f = find(root, "data")) parse_data_section(*f, plan.data, "data");
  if (const json* f = find(root, "improve")) parse_improve_section(*f, plan.improve, "improve");
  if (const json* f = find(root, "eval")) {
    if (!f->is_object()) bad("eval", "must be an object");
    check_keys(*f, "eval", {"prompts"});
    plan.eval_prompts = get_int(*f, "prompts", plan.eval_prompts, "eval");
  }
  plan.model.prompt_dim = plan.env.prompt_dim;
  plan.model.response_dim = plan.env.response_dim;
  plan.validate();
  return plan;
}

ProbeConfig parse_probe_config(const std::string& text) {
  const json root = parse_root(text);
  check_keys(root, "",
             {"model", "env", "oracle", "policy", "pair_count", "meta_count", "meta_k", "etas",
              "exact_pair_mean"});
  ProbeConfig cfg;
  cfg.env = default_env();
  cfg.model.hidden_dims = {16};
  if (const json* f = find(root, "env")) parse_env_section(*f, cfg.env, "env");
  if (const json* f = find(root, "model")) parse_model_section(*f, cfg.model, "model");
  if (const json* f = find(root, "oracle")) {
    parse_oracle_section(*f, cfg.oracle_kind, cfg.oracle_seed, "oracle");
  }
  if (const json* f = find(root, "policy")) {
    const PolicySection p = parse_policy_section(*f, "policy");
    cfg.policy_sigma = p.sigma;
    cfg.policy_init_scale = p.init_scale;
    cfg.policy_seed = p.seed;
  }
  cfg.pair_count = get_int(root, "pair_count", cfg.pair_count, "");
  cfg.meta_count = get_int(root, "meta_count", cfg.meta_count, "");
  cfg.meta_k = get_int(root, "meta_k", cfg.meta_k, "");
  if (const json* f = find(root, "etas")) cfg.etas = get_num_array(*f, "etas");
  cfg.exact_pair_mean = get_bool(root, "exact_pair_mean", cfg.exact_pair_mean, "");
  cfg.model.prompt_dim = cfg.env.prompt_dim;
  cfg.model.response_dim = cfg.env.response_dim;
  cfg.validate();
  return cfg;
}

std::string canonical_probe_config(const ProbeConfig& config) {
  json root;
  root["model"] = model_json(config.model);
  root["env"] = env_json(config.env);
  root["oracle"] = {{"kind", oracle_kind_name(config.oracle_kind)}, {"seed", config.oracle_seed}};
  root["policy"] = {{"sigma", config.policy_sigma},
                    {"init_scale", config.policy_init_scale},
                    {"seed", config.policy_seed}};
  root["pair_count"] = config.pair_count;
  root["meta_count"] = config.meta_count;
  root["meta_k"] = config.meta_k;
  root["etas"] = config.etas;
  root["exact_pair_mean"] = config.exact_pair_mean;
  return root.dump(2) + "\n";
}

std::string canonical_gen_data_config(const GenDataConfig& config) {
  json root;
  root["env"] = env_json(config.env);
  root["oracle"] = {{"kind", oracle_kind_name(config.oracle_kind)}, {"seed", config.oracle_seed}};
  root["policy"] = {{"sigma", config.policy_sigma},
                    {"init_scale", config.policy_init_scale},
                    {"seed", config.policy_seed}};
  root["pair_count"] = config.pair_count;
  root["meta_count"] = config.meta_count;
  root["meta_k"] = config.meta_k;
  return root.dump(2) + "\n";
}

std::string canonical_train_config(const TrainJobConfig& config) {
  json root;
  root["model"] = model_json(config.model);
  root["train"] = train_json(config.train);
  root["mode"] = train_mode_name(config.mode);
  root["data"] = {{"preferences", config.preferences_path},
                  {"meta", config.meta_path},
                  {"val_fraction", config.val_fraction}};
  return root.dump(2) + "\n";
}

std::string canonical_plan(const ExperimentPlan& plan) {
  json root;
  root["rounds"] = plan.rounds;
  json modes = json::array();
  for (RmMode m : plan.rm_modes) modes.push_back(rm_mode_name(m));
  root["rm_mode"] = modes;
  root["warm_start"] = plan.warm_start;
  root["seed"] = plan.seed;
  root["model"] = model_json(plan.model);
  root["train"] = train_json(plan.train);
  root["env"] = env_json(plan.env);
  root["oracle"] = {{"kind", oracle_kind_name(plan.oracle_kind)}, {"seed", plan.oracle_seed}};
  root["policy"] = {{"sigma", plan.policy_sigma},
                    {"init_scale", plan.policy_init_scale},
                    {"seed", plan.policy_seed}};
  root["data"] = {{"pair_count", plan.data.pair_count},
                  {"val_fraction", plan.data.val_fraction},
                  {"meta_count", plan.data.meta_count},
                  {"meta_k", plan.data.meta_k},
                  {"meta_prompts", meta_prompt_source_name(plan.data.meta_prompts)}};
  root["improve"] = {{"k", plan.improve.k},
                     {"step_size", plan.improve.step_size},
                     {"contraction", plan.improve.contraction},
                     {"prompt_batch", plan.improve.prompt_batch}};
  root["eval"] = {{"prompts", plan.eval_prompts}};
  return root.dump(2) + "\n";
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[std::size_t(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

TrainMode parse_train_mode(const std::string& name) {
  if (name == "vanilla") return TrainMode::kVanilla;
  if (name == "metarm") return TrainMode::kMetarm;
  throw ConfigError("config: mode must be \"vanilla\" or \"metarm\", got \"" + name + "\"");
}

RmMode parse_rm_mode(const std::string& name) {
  if (name == "vanilla") return RmMode::kVanilla;
  if (name == "metarm") return RmMode::kMetarm;
  if (name == "frozen") return RmMode::kFrozen;
  throw ConfigError("config: rm_mode must be \"vanilla\", \"metarm\", or \"frozen\", got \"" +
                    name + "\"");
}

const char* train_mode_name(TrainMode mode) {
  return mode == TrainMode::kVanilla ? "vanilla" : "metarm";
}

}  // namespace metarm
