#ifndef SPAD_HARNESS_DEFENSE_H_
#define SPAD_HARNESS_DEFENSE_H_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "spad/genattack/reward.h"
#include "spad/harness/record.h"
#include "spad/structpred/model.h"
#include "spad/treebank/sentence.h"

namespace spad::harness {

// Sets pred_a, pred_b and pred_c on every generated sentence, and
// victim_original when it is empty, using up to `jobs` threads.
void FillPredictions(std::vector<AdvRecord> &records, const genattack::ModelTriple &models,
                     int jobs = 1);

// Records whose generated sentence is the original itself, giving the
// floor the attack rates are compared against.
std::vector<AdvRecord> OriginRecords(const treebank::Corpus &corpus,
                                     const genattack::ModelTriple &models, int jobs = 1);

// The generated sentence annotated with B's prediction as gold heads
// (parsers) or gold tags (taggers).
treebank::Sentence PseudoLabel(const AdvRecord &record);

struct FilterResult {
  treebank::Corpus corpus;   // pseudo-labeled, input order
  std::vector<size_t> kept;  // indices into the input
};

// Keeps records where B and C predict the same full structure and it
// differs from A's, up to the first `cap` (negative means no cap).
FilterResult ConsensusFilter(const std::vector<AdvRecord> &records, int cap = -1);

// kBC: B and C agree. kABC: additionally A differs from them.
enum class SampleMode { kBC, kABC };
std::string_view SampleModeName(SampleMode m);  // "bc", "abc"
// Throws ConfigError for unknown names.
SampleMode SampleModeFromName(std::string_view name);

struct SampleResult {
  treebank::Corpus corpus;  // pseudo-labeled, pool order
  long qualifying = 0;
  bool shortfall = false;  // fewer than k qualified; all were returned
};

// Draws k qualifying pool sentences uniformly. Each pool position gets a
// key from (seed, index) and the k smallest keys win, so the choice of one
// sentence never depends on which others qualify. Throws
// PreconditionError on an empty pool or negative k.
SampleResult SampleConsensusCorpus(const treebank::Corpus &pool,
                                   const genattack::ModelTriple &models, SampleMode mode,
                                   int k, uint64_t seed, int jobs = 1);

struct RetrainConfig {
  // Retrain from scratch with the victim's config, or continue from the
  // victim's weights.
  bool fine_tune = false;
  // Fine-tuning only; default 5e-4 for parsers and 1e-4 for taggers.
  std::optional<double> learning_rate;
  // Fine-tuning only; default the victim's epoch count.
  std::optional<int> epochs;

  nlohmann::json ToJson() const;
  static RetrainConfig FromJson(const nlohmann::json &j);
};

inline constexpr double kParserFineTuneLearningRate = 5e-4;
inline constexpr double kTaggerFineTuneLearningRate = 1e-4;

// Trains on train followed by adv. Throws PreconditionError when adv is
// empty and ConfigError when adv lacks the victim's kind of annotation.
structpred::Model AdversarialRetrain(const structpred::Model &victim,
                                     const treebank::Corpus &train,
                                     const treebank::Corpus &adv, const RetrainConfig &config);

}  // namespace spad::harness

#endif  // SPAD_HARNESS_DEFENSE_H_
