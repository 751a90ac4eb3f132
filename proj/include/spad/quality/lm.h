#ifndef SPAD_QUALITY_LM_H_
#define SPAD_QUALITY_LM_H_

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "spad/nn/checkpoint.h"
#include "spad/nn/layers.h"
#include "spad/nn/params.h"
#include "spad/treebank/sentence.h"
#include "spad/treebank/vocab.h"

namespace spad::quality {

enum class LmArch { kNgram, kRecurrent, kUniform };

struct LmConfig {
  LmArch arch = LmArch::kNgram;
  int order = 3;  // n-gram order
  int embed_dim = 32;
  int hidden_dim = 64;
  int epochs = 5;
  int batch_size = 16;
  double learning_rate = 2e-3;
  uint64_t seed = 1;
  int min_count = 1;
  double heldout_fraction = 0.1;

  nlohmann::json ToJson() const;
  // Unknown keys are a ConfigError.
  static LmConfig FromJson(const nlohmann::json &j);
  void Validate() const;
};

// Next-token model over the vocabulary. Every token except PAD, BOS, ROOT
// and MASK is predictable (UNK and EOS included) and receives nonzero
// probability; the others get exactly zero.
class LanguageModel {
 public:
  LanguageModel(LanguageModel &&);
  LanguageModel &operator=(LanguageModel &&);
  ~LanguageModel();

  // Holds out the last heldout_fraction of the corpus to measure
  // perplexity, then trains on the rest. Throws ConfigError when empty.
  static LanguageModel Train(const treebank::Corpus &corpus, const LmConfig &config);
  static LanguageModel Uniform(const treebank::Vocabulary &vocab);
  static LanguageModel FromCheckpoint(const nn::Checkpoint &ck);
  static LanguageModel Load(const std::string &path);
  nn::Checkpoint ToCheckpoint() const;
  void Save(const std::string &path) const;

  LmArch arch() const { return config_.arch; }
  const LmConfig &config() const { return config_; }
  const treebank::Vocabulary &vocab() const { return vocab_; }
  // Number of predictable tokens.
  int support_size() const;
  static bool Predictable(int id);
  // Perplexity on the held-out split at training time (0 when none).
  double heldout_perplexity() const { return heldout_ppl_; }

  // P(. | history) over vocabulary ids; history excludes BOS.
  std::vector<double> NextDistribution(const std::vector<int> &history) const;
  // Sum of natural-log probabilities of tokens then EOS, BOS conditioned on.
  double LogProb(const std::vector<std::string> &tokens) const;
  // exp(-LogProb / (n + 1)). Throws ShapeError on an empty sentence.
  double Perplexity(const std::vector<std::string> &tokens) const;
  double MeanPerplexity(const treebank::Corpus &corpus) const;

  // Recurrent architecture only: the negative log-likelihood of tokens then
  // EOS as a graph expression, and the trainable parameters. ConfigError for
  // the other architectures.
  nn::Expr SentenceNll(nn::Graph &g, const std::vector<std::string> &tokens) const;
  nn::ParamStore &params() const;

 private:
  struct Ngrams;
  struct Rnn;

  LanguageModel();
  void TrainNgram(const treebank::Corpus &corpus);
  void TrainRnn(const treebank::Corpus &corpus);
  std::vector<double> SentenceLogProbs(const std::vector<int> &ids) const;
  nn::Expr IdsLogLik(nn::Graph &g, const std::vector<int> &ids, size_t *tokens) const;

  LmConfig config_;
  treebank::Vocabulary vocab_;
  double heldout_ppl_ = 0.0;
  std::unique_ptr<Ngrams> ngrams_;
  std::unique_ptr<Rnn> rnn_;
};

}  // namespace spad::quality

#endif  // SPAD_QUALITY_LM_H_
