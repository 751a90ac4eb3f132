#ifndef SPAD_WORDATTACK_FGSM_H_
#define SPAD_WORDATTACK_FGSM_H_

#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "spad/harness/record.h"
#include "spad/nn/tensor.h"
#include "spad/structpred/model.h"
#include "spad/treebank/sentence.h"

namespace spad::wordattack {

struct PerturbationConfig {
  double epsilon = 1.0;      // L2 norm of the whole-sentence perturbation
  int max_replacements = -1;  // per sentence; negative means unlimited

  nlohmann::json ToJson() const;
  static PerturbationConfig FromJson(const nlohmann::json &j);
  // Throws ConfigError unless epsilon > 0.
  void Validate() const;
};

// d log P(y | x) / d v_i for every token embedding v_i: [n, dim]. y is a
// head array (parsers) or tag ids (taggers). Throws ShapeError on a length
// mismatch and ConfigError for non-differentiable models.
nn::Tensor GradWrtEmbeddings(const structpred::Model &model,
                             const std::vector<std::string> &tokens,
                             const std::vector<int> &y);

struct Perturbed {
  nn::Tensor vectors;
  bool zero_gradient = false;  // the gradient was all zero; nothing moved
};

// v + epsilon * sign(g) / ||sign(g)||, the norm taken over the whole
// matrix. g is the gradient of the quantity to increase.
Perturbed FgsmPerturb(const nn::Tensor &v, const nn::Tensor &g, double epsilon);

// Euclidean nearest row of table, skipping reserved ids and exclude. Ties
// go to the smallest id. Throws PreconditionError when nothing is left.
int NearestWord(const std::vector<double> &query, const nn::Tensor &table,
                const std::set<int> &exclude = {});

struct AttackResult {
  harness::AdvRecord record;  // pred_a on both sentences; B and C empty
  std::vector<int> replaced;  // positions whose word changed
  bool zero_gradient = false;
};

// One FGSM step against the victim followed by nearest-word replacement.
// The target structure is gold when present, else the victim's prediction.
AttackResult AttackSentence(const structpred::Model &victim, const treebank::Sentence &x,
                            const PerturbationConfig &config);

}  // namespace spad::wordattack

#endif  // SPAD_WORDATTACK_FGSM_H_
