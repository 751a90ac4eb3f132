#ifndef SPAD_STRUCTPRED_MODEL_H_
#define SPAD_STRUCTPRED_MODEL_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "spad/nn/checkpoint.h"
#include "spad/nn/graph.h"
#include "spad/nn/layers.h"
#include "spad/nn/params.h"
#include "spad/structpred/decode.h"
#include "spad/treebank/sentence.h"
#include "spad/treebank/vocab.h"

namespace spad::structpred {

enum class ModelKind { kParser, kTagger };

enum class Flavor {
  kRecurrentBiaffineCle,
  kRecurrentBiaffineEisner,
  kWindowFeedforwardGreedy,
  kRecurrentSoftmax,
  kWindowFeedforward,
  kHmmViterbi,
};

std::string_view FlavorName(Flavor f);
// Throws ConfigError for unknown names.
Flavor FlavorFromName(std::string_view name);
ModelKind KindOf(Flavor f);
std::string_view KindName(ModelKind k);

struct ModelConfig {
  Flavor flavor = Flavor::kRecurrentBiaffineCle;
  int embed_dim = 64;
  int hidden_dim = 64;  // LSTM width per direction, or MLP width
  int layers = 1;
  int arc_dim = 64;
  int window = 2;            // context words on each side (window flavors)
  int distance_buckets = 8;  // signed head distance clipped to +-buckets
  double dropout = 0.2;
  double word_dropout = 0.05;  // input words replaced by UNK while training
  int epochs = 10;
  int batch_size = 8;
  double learning_rate = 2e-3;
  uint64_t seed = 1;
  int min_count = 1;
  double hmm_smoothing = 0.1;  // add-k for the HMM flavor

  // Per-flavor defaults; the two recurrent parsers differ in width, depth
  // and seed.
  static ModelConfig Default(Flavor f);
  nlohmann::json ToJson() const;
  // Starts from Default(flavor) and overrides the keys present. Unknown
  // keys are a ConfigError.
  static ModelConfig FromJson(const nlohmann::json &j);
  void Validate() const;
};

// A trained parser or tagger of any flavor. Neural flavors expose a
// differentiable path from input embeddings to scores so attacks can take
// gradients with respect to the words.
class Model {
 public:
  Model(Model &&) = default;
  Model &operator=(Model &&) = default;

  // Throws ConfigError on an empty corpus or missing gold annotation.
  static Model Train(const treebank::Corpus &corpus, const ModelConfig &config);
  // Continues training a copy of this model on corpus with its own
  // vocabulary (unseen words map to UNK). Throws ConfigError for the HMM
  // flavor, an empty corpus or missing gold annotation.
  Model FineTune(const treebank::Corpus &corpus, int epochs, double learning_rate) const;
  static Model FromCheckpoint(const nn::Checkpoint &ck);
  static Model Load(const std::string &path);
  nn::Checkpoint ToCheckpoint() const;
  void Save(const std::string &path) const;

  ModelKind kind() const { return KindOf(config_.flavor); }
  Flavor flavor() const { return config_.flavor; }
  const ModelConfig &config() const { return config_; }
  const treebank::Vocabulary &vocab() const { return vocab_; }
  const std::vector<double> &training_curve() const { return curve_; }
  bool differentiable() const { return config_.flavor != Flavor::kHmmViterbi; }

  // Word ids as fed to the scorer; parsers prepend ROOT.
  std::vector<int> InputIds(const std::vector<std::string> &tokens) const;
  nn::Parameter &embeddings() const;
  // Parser: [n, n+1] head scores per dependent row with the -inf diagonal.
  // Tagger: [n, T] tag scores. emb holds one row per InputIds entry.
  nn::Expr Scores(nn::Graph &g, nn::Expr emb, Rng *dropout_rng = nullptr) const;
  // Summed negative log-likelihood of target (heads or tags) under scores.
  nn::Expr Nll(nn::Graph &g, nn::Expr scores, const std::vector<int> &target) const;
  // Summed NLL of the sentence's gold structure, built from the model's own
  // embedding table.
  nn::Expr SentenceNll(nn::Graph &g, const treebank::Sentence &s,
                       Rng *dropout_rng = nullptr) const;

  ArcScores ScoreArcs(const std::vector<std::string> &tokens) const;
  // Tagger scores, or HMM emissions with start/end folded in.
  nn::Tensor TagScores(const std::vector<std::string> &tokens) const;

  // Heads for parsers, tag ids for taggers.
  std::vector<int> Predict(const std::vector<std::string> &tokens) const;
  treebank::DepTree PredictTree(const std::vector<std::string> &tokens) const;
  treebank::TagSeq PredictTags(const std::vector<std::string> &tokens) const;

  // The gold heads or tags this model is trained against.
  std::vector<int> GoldOf(const treebank::Sentence &s) const;
  nn::ParamStore &params() const { return params_; }

 private:
  Model() = default;
  void Build(Rng *init);  // creates or binds layers
  void TrainNeural(const treebank::Corpus &corpus);
  void TrainHmm(const treebank::Corpus &corpus);
  nn::Expr Window(nn::Graph &g, nn::Expr emb) const;

  ModelConfig config_;
  treebank::Vocabulary vocab_;
  mutable nn::ParamStore params_;
  std::vector<double> curve_;

  nn::BiLstm encoder_;
  nn::Linear mlp_;
  nn::Linear head_proj_;
  nn::Linear dep_proj_;
  nn::Linear out_;
};

// Token-weighted agreement of predictions with gold over a corpus (UAS for
// parsers, accuracy for taggers).
double Evaluate(const Model &m, const treebank::Corpus &corpus);

}  // namespace spad::structpred

#endif  // SPAD_STRUCTPRED_MODEL_H_
