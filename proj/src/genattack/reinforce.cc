#include "spad/genattack/reinforce.h"

#include <algorithm>
#include <fstream>
#include <limits>

#include "spad/base/error.h"
#include "spad/base/rng.h"

namespace spad::genattack {

using nn::Expr;
using nn::Graph;

void BaselineState::Update(double batch_mean, double decay) {
  if (!initialized) {
    value = batch_mean;
    initialized = true;
    return;
  }
  value = decay * value + (1.0 - decay) * batch_mean;
}

StepStats AccumulatePolicyGradient(const Generator &gen, const treebank::Corpus &batch,
                                   const RewardFn &reward, BaselineState &baseline,
                                   const RLConfig &config, uint64_t step) {
  if (batch.empty()) throw PreconditionError("REINFORCE needs a non-empty batch");
  StepStats stats;
  std::vector<std::vector<int>> sources;
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto &s : batch) {
    Rng rng = Rng::Derive(config.seed, "rl-sample", Mix64(step) ^ Fnv1a64(s.id));
    Sample sample;
    sources.push_back(gen.Ids(s.tokens));
    sample.output = gen.SampleIds(sources.back(), rng, config.temperature);
    if (sample.output.empty()) {
      sample.degenerate = true;
      ++stats.degenerate;
    } else {
      sample.reward = reward(s.tokens, gen.Tokens(sample.output));
      lowest = std::min(lowest, sample.reward.total);
    }
    stats.samples.push_back(std::move(sample));
  }
  if (!std::isfinite(lowest)) lowest = 0.0;
  double sum = 0.0;
  for (Sample &s : stats.samples) {
    if (s.degenerate) {
      s.reward = harness::RewardBreakdown();
      s.reward.alpha = config.alpha;
      s.reward.beta = config.beta;
      s.reward.gamma = config.gamma;
      s.reward.w_unk = config.w_unk;
      s.reward.total = lowest;
    }
    sum += s.reward.total;
  }
  const double n = static_cast<double>(batch.size());
  stats.mean_reward = sum / n;
  if (!baseline.initialized) baseline.Update(stats.mean_reward, config.baseline_decay);
  stats.baseline_used = baseline.value;

  Graph g;
  std::vector<Expr> terms;
  for (size_t i = 0; i < batch.size(); ++i) {
    const double advantage = stats.samples[i].reward.total - stats.baseline_used;
    if (advantage == 0.0) continue;
    terms.push_back(
        nn::Scale(gen.SequenceLogProb(g, sources[i], stats.samples[i].output), advantage));
  }
  if (!terms.empty()) {
    Expr total = terms.size() == 1 ? terms[0] : nn::Sum(nn::ConcatRows(terms));
    g.Backward(nn::Scale(total, -1.0 / n));
  }
  baseline.Update(stats.mean_reward, config.baseline_decay);
  stats.baseline_after = baseline.value;
  return stats;
}

StepStats ReinforceStep(Generator &gen, nn::AdamState &adam, const treebank::Corpus &batch,
                        const RewardFn &reward, BaselineState &baseline,
                        const RLConfig &config, uint64_t step) {
  StepStats stats = AccumulatePolicyGradient(gen, batch, reward, baseline, config, step);
  adam.Step(gen.params());
  return stats;
}

nlohmann::json EpochMetrics::ToJson() const {
  return {{"epoch", epoch},
          {"mean_reward", mean_reward},
          {"mean_s_p", mean_s_p},
          {"mean_perplexity", mean_perplexity},
          {"mean_s_m", mean_s_m},
          {"unk_rate", unk_rate},
          {"degenerate", degenerate}};
}

std::vector<EpochMetrics> TrainAttacker(Generator &gen, const treebank::Corpus &corpus,
                                        const RewardFn &reward, const RLConfig &config,
                                        const std::string &metrics_path) {
  config.Validate();
  if (corpus.empty()) throw ConfigError("cannot train the attacker on an empty corpus");
  std::ofstream metrics;
  if (!metrics_path.empty()) {
    metrics.open(metrics_path, std::ios::binary);
    if (!metrics) throw IoError("cannot write " + metrics_path);
  }
  nn::AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;
  nn::AdamState adam(gen.params(), adam_config);
  BaselineState baseline;
  Rng shuffle = Rng::Derive(config.seed, "rl-shuffle");
  std::vector<size_t> order(corpus.size());
  std::vector<EpochMetrics> out;
  uint64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.UniformInt(i)]);
    }
    EpochMetrics m;
    m.epoch = epoch;
    int scored = 0, samples = 0;
    int unk = 0, generated_tokens = 0;
    for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const size_t end = std::min(order.size(), begin + config.batch_size);
      treebank::Corpus batch;
      for (size_t k = begin; k < end; ++k) batch.push_back(corpus[order[k]]);
      const StepStats stats = ReinforceStep(gen, adam, batch, reward, baseline, config, step++);
      for (const Sample &s : stats.samples) {
        ++samples;
        m.mean_reward += s.reward.total;
        if (s.degenerate) {
          ++m.degenerate;
          continue;
        }
        ++scored;
        m.mean_s_p += s.reward.s_p;
        m.mean_perplexity += -s.reward.s_f;
        m.mean_s_m += s.reward.s_m;
        for (int id : s.output) unk += id == treebank::kUnkId;
        generated_tokens += static_cast<int>(s.output.size());
      }
    }
    m.mean_reward /= std::max(samples, 1);
    m.mean_s_p /= std::max(scored, 1);
    m.mean_perplexity /= std::max(scored, 1);
    m.mean_s_m /= std::max(scored, 1);
    m.unk_rate = static_cast<double>(unk) / std::max(generated_tokens, 1);
    if (metrics.is_open()) metrics << m.ToJson().dump() << '\n';
    out.push_back(m);
  }
  gen.params().RoundToFloat();
  if (metrics.is_open() && !metrics) throw IoError("failed writing " + metrics_path);
  return out;
}

}  // namespace spad::genattack
