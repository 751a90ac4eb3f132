#ifndef SPAD_GENATTACK_REINFORCE_H_
#define SPAD_GENATTACK_REINFORCE_H_

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spad/genattack/generator.h"
#include "spad/genattack/reward.h"
#include "spad/harness/record.h"
#include "spad/nn/optim.h"
#include "spad/treebank/sentence.h"

namespace spad::genattack {

// Exponential moving average of batch-mean rewards. An uninitialized
// baseline starts at the first batch mean.
struct BaselineState {
  double value = 0.0;
  bool initialized = false;

  // value <- decay * value + (1 - decay) * batch_mean.
  void Update(double batch_mean, double decay);
};

// Reward of generated tokens for a source sentence.
using RewardFn = std::function<harness::RewardBreakdown(
    const std::vector<std::string> &x, const std::vector<std::string> &x_hat)>;

struct Sample {
  std::vector<int> output;
  harness::RewardBreakdown reward;
  bool degenerate = false;  // empty output; given the batch minimum reward
};

struct StepStats {
  double mean_reward = 0.0;
  double baseline_used = 0.0;
  double baseline_after = 0.0;
  int degenerate = 0;
  std::vector<Sample> samples;
};

// Draws one output per sentence from its own stream, derived from
// (seed, sentence id, step), scores it, and accumulates the gradient of
// -mean_i (r_i - b) log P(x_hat_i | x_i) into the generator's parameter
// gradients. Updates the baseline. Throws PreconditionError on an empty
// batch.
StepStats AccumulatePolicyGradient(const Generator &gen, const treebank::Corpus &batch,
                                   const RewardFn &reward, BaselineState &baseline,
                                   const RLConfig &config, uint64_t step);

// AccumulatePolicyGradient followed by one optimizer step.
StepStats ReinforceStep(Generator &gen, nn::AdamState &adam, const treebank::Corpus &batch,
                        const RewardFn &reward, BaselineState &baseline,
                        const RLConfig &config, uint64_t step);

struct EpochMetrics {
  int epoch = 0;
  double mean_reward = 0.0;
  double mean_s_p = 0.0;
  double mean_perplexity = 0.0;
  double mean_s_m = 0.0;
  double unk_rate = 0.0;
  int degenerate = 0;

  nlohmann::json ToJson() const;
};

// REINFORCE over the corpus for config.epochs epochs. Writes one metrics
// line per epoch to metrics_path unless it is empty.
std::vector<EpochMetrics> TrainAttacker(Generator &gen, const treebank::Corpus &corpus,
                                        const RewardFn &reward, const RLConfig &config,
                                        const std::string &metrics_path = "");

}  // namespace spad::genattack

#endif  // SPAD_GENATTACK_REINFORCE_H_
