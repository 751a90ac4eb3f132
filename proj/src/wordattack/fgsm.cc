#include "spad/wordattack/fgsm.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spad/base/error.h"
#include "spad/nn/graph.h"

namespace spad::wordattack {

using nn::Tensor;
using structpred::Model;
using structpred::ModelKind;

nlohmann::json PerturbationConfig::ToJson() const {
  return {{"epsilon", epsilon}, {"max_replacements", max_replacements}};
}

PerturbationConfig PerturbationConfig::FromJson(const nlohmann::json &j) {
  if (!j.is_object()) throw ConfigError("perturbation config must be a JSON object");
  PerturbationConfig c;
  try {
    for (const auto &[k, v] : j.items()) {
      if (k != "epsilon" && k != "max_replacements") {
        throw ConfigError("unknown perturbation config key: " + k);
      }
    }
    c.epsilon = j.value("epsilon", c.epsilon);
    c.max_replacements = j.value("max_replacements", c.max_replacements);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed perturbation config: ") + e.what());
  }
  c.Validate();
  return c;
}

void PerturbationConfig::Validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("epsilon must be a positive finite number");
  }
}

namespace {

// Embedding rows of the input ids, ROOT included for parsers.
Tensor InputVectors(const Model &model, const std::vector<int> &ids) {
  const Tensor &table = model.embeddings().value;
  Tensor v(static_cast<int>(ids.size()), table.cols());
  for (int r = 0; r < v.rows(); ++r) {
    for (int c = 0; c < v.cols(); ++c) v(r, c) = table(ids[r], c);
  }
  return v;
}

int Offset(const Model &model) { return model.kind() == ModelKind::kParser ? 1 : 0; }

}  // namespace

Tensor GradWrtEmbeddings(const Model &model, const std::vector<std::string> &tokens,
                         const std::vector<int> &y) {
  if (!model.differentiable()) {
    throw ConfigError("the victim has no embeddings to differentiate");
  }
  if (tokens.empty()) throw ShapeError("cannot attack an empty sentence");
  if (y.size() != tokens.size()) {
    throw ShapeError("structure of length " + std::to_string(y.size()) +
                     " for a sentence of " + std::to_string(tokens.size()));
  }
  nn::Graph g(false, false);
  nn::Expr emb = g.Input(InputVectors(model, model.InputIds(tokens)), true);
  nn::Expr log_p = nn::Scale(model.Nll(g, model.Scores(g, emb), y), -1.0);
  g.Backward(log_p);
  const Tensor &full = g.Grad(emb);
  const int off = Offset(model);
  Tensor out(static_cast<int>(tokens.size()), full.cols());
  if (full.size() == 0) return out;
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) out(r, c) = full(r + off, c);
  }
  return out;
}

Perturbed FgsmPerturb(const Tensor &v, const Tensor &g, double epsilon) {
  if (!v.SameShape(g)) {
    throw ShapeError("gradient " + g.ShapeString() + " does not match " + v.ShapeString());
  }
  Perturbed out{v, false};
  double nonzero = 0.0;
  for (size_t i = 0; i < g.size(); ++i) nonzero += g[i] != 0.0;
  if (nonzero == 0.0) {
    out.zero_gradient = true;
    return out;
  }
  // Each sign entry is +-1 or 0, so the squared norm counts the nonzeros.
  const double scale = epsilon / std::sqrt(nonzero);
  for (size_t i = 0; i < g.size(); ++i) {
    if (g[i] > 0.0) {
      out.vectors[i] += scale;
    } else if (g[i] < 0.0) {
      out.vectors[i] -= scale;
    }
  }
  return out;
}

namespace {

double SquaredDistance(const std::vector<double> &q, const Tensor &table, int row) {
  double d = 0.0;
  for (int c = 0; c < table.cols(); ++c) {
    const double diff = q[c] - table(row, c);
    d += diff * diff;
  }
  return d;
}

}  // namespace

int NearestWord(const std::vector<double> &query, const Tensor &table,
                const std::set<int> &exclude) {
  if (static_cast<int>(query.size()) != table.cols()) {
    throw ShapeError("query of dimension " + std::to_string(query.size()) +
                     " for a table of width " + std::to_string(table.cols()));
  }
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int id = treebank::kNumReserved; id < table.rows(); ++id) {
    if (exclude.count(id)) continue;
    const double d = SquaredDistance(query, table, id);
    if (best < 0 || d < best_d) {
      best = id;
      best_d = d;
    }
  }
  if (best < 0) throw PreconditionError("every candidate word is excluded");
  return best;
}

AttackResult AttackSentence(const Model &victim, const treebank::Sentence &x,
                            const PerturbationConfig &config) {
  config.Validate();
  const bool has_gold =
      victim.kind() == ModelKind::kParser ? x.gold_tree.has_value() : x.gold_tags.has_value();
  const std::vector<int> victim_original = victim.Predict(x.tokens);
  const std::vector<int> y = has_gold ? victim.GoldOf(x) : victim_original;

  const std::vector<int> all_ids = victim.InputIds(x.tokens);
  const std::vector<int> ids(all_ids.begin() + Offset(victim), all_ids.end());
  const Tensor grad = GradWrtEmbeddings(victim, x.tokens, y);
  const Tensor v = InputVectors(victim, ids);
  // Step against log P(y | x), i.e. along the gradient of the NLL.
  Tensor ascent = grad;
  for (size_t i = 0; i < ascent.size(); ++i) ascent[i] = -ascent[i];
  const Perturbed p = FgsmPerturb(v, ascent, config.epsilon);

  const Tensor &table = victim.embeddings().value;
  struct Candidate {
    double priority;
    int position;
    int word;
  };
  std::vector<Candidate> candidates;
  for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
    // Unknown words have no position of their own in the table.
    if (treebank::Vocabulary::IsReserved(ids[i])) continue;
    std::vector<double> q(table.cols());
    for (int c = 0; c < table.cols(); ++c) q[c] = p.vectors(i, c);
    const int w = NearestWord(q, table);
    if (w == ids[i] || SquaredDistance(q, table, w) >= SquaredDistance(q, table, ids[i])) {
      continue;
    }
    double norm = 0.0;
    for (int c = 0; c < grad.cols(); ++c) norm += grad(i, c) * grad(i, c);
    candidates.push_back({norm, i, w});
  }
  if (config.max_replacements >= 0 &&
      static_cast<int>(candidates.size()) > config.max_replacements) {
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate &a, const Candidate &b) { return a.priority > b.priority; });
    candidates.resize(config.max_replacements);
  }

  AttackResult result;
  result.zero_gradient = p.zero_gradient;
  harness::AdvRecord &r = result.record;
  r.id = x.id;
  r.kind = std::string(structpred::KindName(victim.kind()));
  r.original = x.tokens;
  r.generated = x.tokens;
  for (const Candidate &c : candidates) {
    r.generated[c.position] = victim.vocab().Token(c.word);
    result.replaced.push_back(c.position);
  }
  std::sort(result.replaced.begin(), result.replaced.end());
  r.victim_original = victim_original;
  r.pred_a = result.replaced.empty() ? victim_original : victim.Predict(r.generated);
  return result;
}

}  // namespace spad::wordattack
