#ifndef SPAD_GENATTACK_GENERATOR_H_
#define SPAD_GENATTACK_GENERATOR_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "spad/base/rng.h"
#include "spad/nn/checkpoint.h"
#include "spad/nn/graph.h"
#include "spad/nn/layers.h"
#include "spad/nn/params.h"
#include "spad/treebank/sentence.h"
#include "spad/treebank/vocab.h"

namespace spad::genattack {

struct GeneratorConfig {
  int embed_dim = 64;
  int hidden_dim = 128;  // per encoder direction and decoder width
  int layers = 2;        // encoder and decoder depth
  int max_length = 40;   // output tokens before a forced stop
  int min_count = 1;
  uint64_t seed = 1;

  nlohmann::json ToJson() const;
  static GeneratorConfig FromJson(const nlohmann::json &j);
  void Validate() const;
};

// Denoising autoencoder pretraining.
struct DaeConfig {
  double mask_prob = 0.1;  // each input word becomes MASK independently
  int epochs = 3;
  int batch_size = 16;
  double learning_rate = 5e-3;
  uint64_t seed = 1;

  nlohmann::json ToJson() const;
  static DaeConfig FromJson(const nlohmann::json &j);
  // Throws ConfigError unless mask_prob lies in [0, 1).
  void Validate() const;
};

// Encoder-decoder with attention. The bidirectional encoder reads the
// source; the decoder attends over the encoder states at every step.
// PAD, BOS, ROOT and MASK are never emitted.
class Generator {
 public:
  Generator(Generator &&) = default;
  Generator &operator=(Generator &&) = default;

  static Generator Create(treebank::Vocabulary vocab, const GeneratorConfig &config);
  // Vocabulary built from the corpus.
  static Generator Create(const treebank::Corpus &corpus, const GeneratorConfig &config);
  static Generator FromCheckpoint(const nn::Checkpoint &ck);
  static Generator Load(const std::string &path);
  nn::Checkpoint ToCheckpoint() const;
  void Save(const std::string &path) const;

  const GeneratorConfig &config() const { return config_; }
  const treebank::Vocabulary &vocab() const { return vocab_; }
  nn::ParamStore &params() const { return params_; }
  const std::vector<double> &pretrain_curve() const { return curve_; }
  static bool Emittable(int id);

  // Summed log-probability of output ids given source ids; EOS is scored
  // unless the output has max_length tokens.
  nn::Expr SequenceLogProb(nn::Graph &g, const std::vector<int> &source,
                           const std::vector<int> &output) const;
  // Next-token distributions along a given output prefix: row t is
  // P(. | source, output[0..t)), for t = 0..prefix.size().
  nn::Tensor StepDistributions(const std::vector<int> &source,
                               const std::vector<int> &prefix) const;

  // Greedy decoding (argmax, ties to the smallest id) is deterministic.
  std::vector<int> GreedyIds(const std::vector<int> &source) const;
  // Ancestral sampling at the given temperature.
  std::vector<int> SampleIds(const std::vector<int> &source, Rng &rng,
                             double temperature = 1.0) const;
  std::vector<std::string> Generate(const std::vector<std::string> &tokens) const;
  std::vector<std::string> Generate(const std::vector<std::string> &tokens, Rng &rng,
                                    double temperature = 1.0) const;

  std::vector<int> Ids(const std::vector<std::string> &tokens) const;
  std::vector<std::string> Tokens(const std::vector<int> &ids) const;

  // Reconstructs every sentence from a masked copy; returns the per-token
  // NLL of each epoch. Throws ConfigError on an empty corpus.
  std::vector<double> PretrainDae(const treebank::Corpus &corpus, const DaeConfig &config);

 private:
  struct Encoded {
    nn::Expr states;  // [n, 2H]
    nn::Expr keys;    // [n, H], states projected for attention
    std::vector<nn::LstmState> initial;  // decoder start state per layer
  };

  Generator() = default;
  void Bind();
  Encoded Encode(nn::Graph &g, const std::vector<int> &source) const;
  // Logits [rows, V] from decoder states [rows, H].
  nn::Expr Readout(nn::Graph &g, const Encoded &enc, nn::Expr dec) const;
  std::vector<int> Decode(const std::vector<int> &source, Rng *rng, double temperature) const;

  GeneratorConfig config_;
  treebank::Vocabulary vocab_;
  mutable nn::ParamStore params_;
  std::vector<double> curve_;
  nn::Tensor mask_;  // [1, V]; -inf on ids that are never emitted

  nn::BiLstm encoder_;
  std::vector<nn::LstmLayer> decoder_;
  std::vector<nn::Linear> bridge_;  // mean encoder state -> decoder start
  nn::Linear attention_;
  nn::Linear combine_;
  nn::Linear out_;
};

}  // namespace spad::genattack

#endif  // SPAD_GENATTACK_GENERATOR_H_
