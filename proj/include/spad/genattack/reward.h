#ifndef SPAD_GENATTACK_REWARD_H_
#define SPAD_GENATTACK_REWARD_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "spad/harness/record.h"
#include "spad/quality/embedder.h"
#include "spad/quality/lm.h"
#include "spad/structpred/model.h"

namespace spad::genattack {

enum class Task { kParsing, kTagging };

struct RLConfig {
  double alpha = 1.0;    // structure term
  double beta = 0.001;   // fluency term (negative perplexity)
  double gamma = 100.0;  // meaning-preservation term
  double w_unk = 500.0;  // UNK-rate penalty
  double baseline_decay = 0.9;
  int batch_size = 16;
  int epochs = 1;
  double temperature = 1.0;
  double learning_rate = 2e-5;
  uint64_t seed = 1;

  // Defaults for each task: tagging uses gamma 30, no UNK penalty and a
  // larger learning rate.
  static RLConfig ForTask(Task t);
  nlohmann::json ToJson() const;
  // Starts from the current values and overrides the keys present.
  static RLConfig FromJson(const nlohmann::json &j, const RLConfig &base);
  static RLConfig FromJson(const nlohmann::json &j);
  // Throws ConfigError if alpha, beta and gamma are all zero or other
  // fields are out of range.
  void Validate() const;
};

// The victim A and two references B and C, all of one kind.
struct ModelTriple {
  const structpred::Model *a = nullptr;
  const structpred::Model *b = nullptr;
  const structpred::Model *c = nullptr;

  // Throws ConfigError on a missing model or mixed kinds.
  void Validate() const;
};

struct Predictions {
  std::vector<int> a, b, c;
};

Predictions PredictAll(const ModelTriple &models, const std::vector<std::string> &tokens);

// -f(yA, yB) - f(yA, yC) + f(yB, yC) with f the token agreement.
double StructureReward(const Predictions &p);
double StructureReward(const std::vector<std::string> &tokens, const ModelTriple &models);

struct Scorers {
  const quality::LanguageModel *lm = nullptr;
  const quality::Embedder *embedder = nullptr;
};

// Weighted reward of generated tokens x_hat for source x. Throws
// ShapeError on an empty x_hat and ConfigError when a scorer is missing.
harness::RewardBreakdown CompositeReward(const std::vector<std::string> &x,
                                         const std::vector<std::string> &x_hat,
                                         const ModelTriple &models, const Scorers &scorers,
                                         const RLConfig &config,
                                         Predictions *predictions = nullptr);

// Combines precomputed terms with the weights of config.
harness::RewardBreakdown Combine(double s_p, double perplexity, double s_m, double unk_rate,
                                 const RLConfig &config);

}  // namespace spad::genattack

#endif  // SPAD_GENATTACK_REWARD_H_
