#include "spad/cli/run_config.h"

#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "spad/base/error.h"

namespace spad::cli {

using structpred::Flavor;
using structpred::ModelConfig;

namespace {

const char *const kSections[] = {"task",         "ablation",  "data",     "models",
                                 "lm",           "embedder",  "generator", "dae",
                                 "rl",           "perturbation", "retrain", "consensus_cap",
                                 "significance"};

template <typename T>
T Get(const nlohmann::json &j, const char *key, const T &fallback, const std::string &where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void RejectUnknown(const nlohmann::json &j, const std::set<std::string> &known,
                   const std::string &where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  std::vector<std::string> unknown;
  for (const auto &[key, value] : j.items()) {
    if (!known.count(key)) unknown.push_back(key);
  }
  if (unknown.empty()) return;
  std::string list;
  for (const auto &k : unknown) list += (list.empty() ? "" : ", ") + k;
  throw ConfigError("unknown keys in " + where + ": " + list);
}

nlohmann::json Section(const nlohmann::json &j, const char *key) {
  return j.contains(key) ? j.at(key) : nlohmann::json::object();
}

std::array<Flavor, 3> DefaultFlavors(genattack::Task task) {
  if (task == genattack::Task::kTagging) {
    return {Flavor::kRecurrentSoftmax, Flavor::kWindowFeedforward, Flavor::kHmmViterbi};
  }
  return {Flavor::kRecurrentBiaffineCle, Flavor::kRecurrentBiaffineEisner,
          Flavor::kWindowFeedforwardGreedy};
}

// Resolves one model entry given the flavor and seed its role would get.
ModelConfig ResolveModel(const nlohmann::json &models, Role role, Flavor flavor,
                         std::optional<uint64_t> seed) {
  const char *key = role == Role::kA ? "a" : role == Role::kB ? "b" : "c";
  nlohmann::json j = Section(models, key);
  if (!j.is_object()) throw ConfigError(std::string("models.") + key + " must be an object");
  if (!j.contains("flavor")) {
    j["flavor"] = std::string(structpred::FlavorName(flavor));
    if (seed && !j.contains("seed")) j["seed"] = *seed;
  } else if (seed && !j.contains("seed") &&
             structpred::FlavorFromName(j["flavor"].get<std::string>()) == flavor) {
    j["seed"] = *seed;
  }
  return ModelConfig::FromJson(j);
}

// Where each default comes from, by dotted-path prefix; the longest match
// wins.
const std::map<std::string, std::string> &DefaultOrigins() {
  static const auto *origins = new std::map<std::string, std::string>{
      {"rl.alpha", "published"},
      {"rl.beta", "published"},
      {"rl.gamma", "published"},
      {"rl.w_unk", "published"},
      {"rl.learning_rate", "published"},
      {"rl.epochs", "desk-scale"},
      {"rl.batch_size", "desk-scale"},
      {"dae", "desk-scale"},
      {"data", "desk-scale"},
      {"generator", "desk-scale"},
      {"models", "desk-scale"},
      {"lm", "desk-scale"},
      {"embedder", "desk-scale"},
      {"perturbation.epsilon", "unit step"},
  };
  return *origins;
}

std::string OriginOf(const std::string &path) {
  std::string best = "toolkit";
  size_t best_len = 0;
  for (const auto &[prefix, origin] : DefaultOrigins()) {
    const bool match = path == prefix || (path.size() > prefix.size() &&
                                          path.compare(0, prefix.size(), prefix) == 0 &&
                                          path[prefix.size()] == '.');
    if (match && prefix.size() > best_len) {
      best = origin;
      best_len = prefix.size();
    }
  }
  return best;
}

void CollectOrigins(const nlohmann::json &resolved, const nlohmann::json *given,
                    const std::string &path, std::map<std::string, std::string> &out) {
  if (resolved.is_object() && !resolved.empty() && path != "data.grammar") {
    for (const auto &[key, value] : resolved.items()) {
      const nlohmann::json *sub =
          given != nullptr && given->is_object() && given->contains(key) ? &given->at(key)
                                                                          : nullptr;
      CollectOrigins(value, sub, path.empty() ? key : path + "." + key, out);
    }
    return;
  }
  out[path] = given != nullptr ? "user" : OriginOf(path);
}

}  // namespace

treebank::SynthGrammarConfig DataConfig::Grammar() const {
  if (grammar.is_null()) return treebank::DefaultGrammarConfig();
  return treebank::GrammarFromJson(grammar);
}

std::string_view AblationName(Ablation a) {
  switch (a) {
    case Ablation::kNone:
      return "none";
    case Ablation::kAllSame:
      return "allsame";
    case Ablation::kEvalSame:
      return "evalsame";
  }
  return "none";
}

Ablation AblationFromName(std::string_view name) {
  if (name == "none") return Ablation::kNone;
  if (name == "allsame") return Ablation::kAllSame;
  if (name == "evalsame") return Ablation::kEvalSame;
  throw ConfigError("unknown ablation '" + std::string(name) +
                    "' (expected none, allsame or evalsame)");
}

std::string_view RoleName(Role r) {
  return r == Role::kA ? "a" : r == Role::kB ? "b" : "c";
}

Role RoleFromName(std::string_view name) {
  if (name == "a") return Role::kA;
  if (name == "b") return Role::kB;
  if (name == "c") return Role::kC;
  throw ConfigError("unknown model role '" + std::string(name) + "' (expected a, b or c)");
}

nlohmann::json RunConfig::ToJson() const {
  nlohmann::json j;
  j["task"] = task == genattack::Task::kParsing ? "parsing" : "tagging";
  j["ablation"] = AblationName(ablation);
  j["data"] = {{"train_size", data.train_size}, {"dev_size", data.dev_size},
               {"test_size", data.test_size},   {"train_seed", data.train_seed},
               {"dev_seed", data.dev_seed},     {"test_seed", data.test_seed},
               {"grammar", data.grammar}};
  j["models"] = {{"a", models[0].ToJson()}, {"b", models[1].ToJson()}, {"c", models[2].ToJson()}};
  j["lm"] = lm.ToJson();
  j["embedder"] = embedder.ToJson();
  j["generator"] = generator.ToJson();
  j["dae"] = dae.ToJson();
  j["rl"] = rl.ToJson();
  j["perturbation"] = perturbation.ToJson();
  j["retrain"] = retrain.ToJson();
  j["consensus_cap"] = consensus_cap;
  j["significance"] = {{"method", harness::TestMethodName(significance.method)},
                       {"resamples", significance.resamples},
                       {"seed", significance.seed},
                       {"unit", significance.unit}};
  return j;
}

RunConfig RunConfig::FromJson(const nlohmann::json &j) {
  RejectUnknown(j, std::set<std::string>(std::begin(kSections), std::end(kSections)), "config");
  RunConfig c;
  const std::string task = Get<std::string>(j, "task", "parsing", "config");
  if (task == "parsing") {
    c.task = genattack::Task::kParsing;
  } else if (task == "tagging") {
    c.task = genattack::Task::kTagging;
  } else {
    throw ConfigError("unknown task '" + task + "' (expected parsing or tagging)");
  }
  c.ablation = AblationFromName(Get<std::string>(j, "ablation", "none", "config"));

  const nlohmann::json data = Section(j, "data");
  RejectUnknown(data,
                {"train_size", "dev_size", "test_size", "train_seed", "dev_seed", "test_seed",
                 "grammar"},
                "data");
  c.data.train_size = Get(data, "train_size", c.data.train_size, "data");
  c.data.dev_size = Get(data, "dev_size", c.data.dev_size, "data");
  c.data.test_size = Get(data, "test_size", c.data.test_size, "data");
  c.data.train_seed = Get(data, "train_seed", c.data.train_seed, "data");
  c.data.dev_seed = Get(data, "dev_seed", c.data.dev_seed, "data");
  c.data.test_seed = Get(data, "test_seed", c.data.test_seed, "data");
  if (data.contains("grammar")) c.data.grammar = data.at("grammar");

  const nlohmann::json models = Section(j, "models");
  RejectUnknown(models, {"a", "b", "c"}, "models");
  const std::array<Flavor, 3> flavors = DefaultFlavors(c.task);
  c.models[0] = ResolveModel(models, Role::kA, flavors[0], std::nullopt);
  const ModelConfig &a = c.models[0];
  if (c.ablation == Ablation::kAllSame) {
    c.models[1] = ResolveModel(models, Role::kB, a.flavor, a.seed + 1);
    c.models[2] = ResolveModel(models, Role::kC, a.flavor, a.seed + 2);
  } else if (c.ablation == Ablation::kEvalSame) {
    c.models[1] = ResolveModel(models, Role::kB, flavors[1], std::nullopt);
    c.models[2] = ResolveModel(models, Role::kC, c.models[1].flavor, c.models[1].seed + 1);
  } else {
    c.models[1] = ResolveModel(models, Role::kB, flavors[1], std::nullopt);
    c.models[2] = ResolveModel(models, Role::kC, flavors[2], std::nullopt);
  }

  c.lm = quality::LmConfig::FromJson(Section(j, "lm"));
  c.embedder = quality::EmbedderConfig::FromJson(Section(j, "embedder"));
  c.generator = genattack::GeneratorConfig::FromJson(Section(j, "generator"));
  c.dae = genattack::DaeConfig::FromJson(Section(j, "dae"));
  c.rl = genattack::RLConfig::FromJson(Section(j, "rl"), genattack::RLConfig::ForTask(c.task));
  c.perturbation = wordattack::PerturbationConfig::FromJson(Section(j, "perturbation"));
  c.retrain = harness::RetrainConfig::FromJson(Section(j, "retrain"));
  c.consensus_cap = Get(j, "consensus_cap", c.consensus_cap, "config");

  const nlohmann::json sig = Section(j, "significance");
  RejectUnknown(sig, {"method", "resamples", "seed", "unit"}, "significance");
  c.significance.method = harness::TestMethodFromName(
      Get<std::string>(sig, "method", "sign_bootstrap", "significance"));
  c.significance.resamples = Get(sig, "resamples", c.significance.resamples, "significance");
  c.significance.seed = Get(sig, "seed", c.significance.seed, "significance");
  c.significance.unit = Get(sig, "unit", c.significance.unit, "significance");

  c.Validate();
  CollectOrigins(c.ToJson(), &j, "", c.origins);
  return c;
}

void RunConfig::Validate() const {
  if (data.train_size < 1 || data.dev_size < 1 || data.test_size < 1) {
    throw ConfigError("data sizes must be >= 1");
  }
  data.Grammar().Validate();
  for (const auto &m : models) m.Validate();
  const structpred::ModelKind kind = task == genattack::Task::kParsing
                                         ? structpred::ModelKind::kParser
                                         : structpred::ModelKind::kTagger;
  for (const auto &m : models) {
    if (structpred::KindOf(m.flavor) != kind) {
      throw ConfigError("model flavor " + std::string(structpred::FlavorName(m.flavor)) +
                        " does not match the task");
    }
  }
  lm.Validate();
  embedder.Validate();
  generator.Validate();
  dae.Validate();
  rl.Validate();
  perturbation.Validate();
  if (significance.resamples < harness::kMinResamples) {
    throw ConfigError("significance.resamples must be >= " +
                      std::to_string(harness::kMinResamples));
  }
  if (significance.unit != "token" && significance.unit != "sentence") {
    throw ConfigError("significance.unit must be token or sentence");
  }
}

RunConfig LoadConfig(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(path + " is not valid JSON: " + e.what());
  }
  return RunConfig::FromJson(j);
}

}  // namespace spad::cli
