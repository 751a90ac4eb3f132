#ifndef SPAD_QUALITY_EMBEDDER_H_
#define SPAD_QUALITY_EMBEDDER_H_

#include <string>
#include <vector>

#include "json.hpp"
#include "spad/nn/checkpoint.h"
#include "spad/nn/tensor.h"
#include "spad/treebank/sentence.h"
#include "spad/treebank/vocab.h"

namespace spad::quality {

struct EmbedderConfig {
  int dim = 32;
  int window = 2;
  int min_count = 1;

  nlohmann::json ToJson() const;
  static EmbedderConfig FromJson(const nlohmann::json &j);
  void Validate() const;
};

// Static word vectors from a truncated SVD of the positive PMI
// co-occurrence matrix. Reserved tokens, UNK included, map to zero.
class Embedder {
 public:
  static Embedder Train(const treebank::Corpus &corpus, const EmbedderConfig &config);
  // Wraps an explicit table with one row per vocabulary id.
  static Embedder FromTable(treebank::Vocabulary vocab, nn::Tensor table);
  static Embedder FromCheckpoint(const nn::Checkpoint &ck);
  static Embedder Load(const std::string &path);
  nn::Checkpoint ToCheckpoint() const;
  void Save(const std::string &path) const;

  int dim() const { return table_.cols(); }
  const treebank::Vocabulary &vocab() const { return vocab_; }
  std::vector<double> Vector(const std::string &token) const;
  std::vector<std::vector<double>> Vectors(const std::vector<std::string> &tokens) const;

 private:
  EmbedderConfig config_;
  treebank::Vocabulary vocab_;
  nn::Tensor table_;
};

// Cosine similarity with each norm floored at 1e-8, so a zero vector has
// similarity 0 to everything.
double Cosine(const std::vector<double> &a, const std::vector<double> &b);

// Greedy-matching F1 between two non-empty sequences of token vectors:
// recall averages, over x, the best cosine against any vector of y;
// precision does the same from y. Without idf weighting.
double SimScore(const std::vector<std::vector<double>> &x,
                const std::vector<std::vector<double>> &y);
double SimScore(const std::vector<std::string> &x, const std::vector<std::string> &y,
                const Embedder &embedder);

}  // namespace spad::quality

#endif  // SPAD_QUALITY_EMBEDDER_H_
