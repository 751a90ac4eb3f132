#ifndef SPAD_CLI_RUN_CONFIG_H_
#define SPAD_CLI_RUN_CONFIG_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"
#include "spad/genattack/generator.h"
#include "spad/genattack/reward.h"
#include "spad/harness/defense.h"
#include "spad/harness/significance.h"
#include "spad/quality/embedder.h"
#include "spad/quality/lm.h"
#include "spad/structpred/model.h"
#include "spad/treebank/synthetic.h"
#include "spad/wordattack/fgsm.h"

namespace spad::cli {

struct DataConfig {
  int train_size = 2000;
  int dev_size = 200;
  int test_size = 200;
  uint64_t train_seed = 1;
  uint64_t dev_seed = 2;
  uint64_t test_seed = 3;
  // Grammar in its JSON form; null selects the built-in grammar.
  nlohmann::json grammar;

  treebank::SynthGrammarConfig Grammar() const;
};

// Reference-model ablations. kAllSame gives B and C the victim's
// architecture with other seeds; kEvalSame gives C the architecture of B
// with another seed.
enum class Ablation { kNone, kAllSame, kEvalSame };
std::string_view AblationName(Ablation a);  // "none", "allsame", "evalsame"
Ablation AblationFromName(std::string_view name);

enum class Role { kA, kB, kC };
std::string_view RoleName(Role r);  // "a", "b", "c"
Role RoleFromName(std::string_view name);

struct SignificanceConfig {
  harness::TestMethod method = harness::TestMethod::kSignBootstrap;
  int resamples = 10000;
  uint64_t seed = 1;
  std::string unit = "token";  // or "sentence"
};

// Every hyper-parameter of a pipeline run. Input and output paths are
// command-line flags, so a config describes a run independently of where
// its artifacts live.
struct RunConfig {
  genattack::Task task = genattack::Task::kParsing;
  Ablation ablation = Ablation::kNone;
  DataConfig data;
  std::array<structpred::ModelConfig, 3> models;  // indexed by Role
  quality::LmConfig lm;
  quality::EmbedderConfig embedder;
  genattack::GeneratorConfig generator;
  genattack::DaeConfig dae;
  genattack::RLConfig rl;
  wordattack::PerturbationConfig perturbation;
  harness::RetrainConfig retrain;
  int consensus_cap = -1;  // negative keeps every filtered example
  SignificanceConfig significance;
  // "user" for keys set in the loaded document, otherwise where the
  // default comes from; keyed by dotted path.
  std::map<std::string, std::string> origins;

  const structpred::ModelConfig &Model(Role r) const { return models[static_cast<int>(r)]; }

  // Fully resolved; FromJson(ToJson()) reproduces the config.
  nlohmann::json ToJson() const;
  // Missing keys take defaults. Unknown keys are a ConfigError naming all
  // of them; section validators raise ConfigError on bad values.
  static RunConfig FromJson(const nlohmann::json &j);
  void Validate() const;
};

// Reads a JSON document. Throws IoError when unreadable and ConfigError
// when it is not valid JSON or not a valid config.
RunConfig LoadConfig(const std::string &path);

}  // namespace spad::cli

#endif  // SPAD_CLI_RUN_CONFIG_H_
