#include "spad/genattack/reward.h"

#include <cmath>

#include "spad/base/error.h"
#include "spad/nn/optim.h"
#include "spad/structpred/agreement.h"

namespace spad::genattack {

RLConfig RLConfig::ForTask(Task t) {
  RLConfig c;
  if (t == Task::kTagging) {
    c.gamma = 30.0;
    c.w_unk = 0.0;
    c.learning_rate = nn::kTaggingRlLearningRate;
  } else {
    c.learning_rate = nn::kParsingRlLearningRate;
  }
  return c;
}

nlohmann::json RLConfig::ToJson() const {
  return {{"alpha", alpha},
          {"beta", beta},
          {"gamma", gamma},
          {"w_unk", w_unk},
          {"baseline_decay", baseline_decay},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"temperature", temperature},
          {"learning_rate", learning_rate},
          {"seed", seed}};
}

RLConfig RLConfig::FromJson(const nlohmann::json &j, const RLConfig &base) {
  if (!j.is_object()) throw ConfigError("RL config must be a JSON object");
  RLConfig c = base;
  const nlohmann::json known = c.ToJson();
  try {
    for (const auto &[k, v] : j.items()) {
      if (!known.contains(k)) throw ConfigError("unknown RL config key: " + k);
    }
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    c.gamma = j.value("gamma", c.gamma);
    c.w_unk = j.value("w_unk", c.w_unk);
    c.baseline_decay = j.value("baseline_decay", c.baseline_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.temperature = j.value("temperature", c.temperature);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed RL config: ") + e.what());
  }
  c.Validate();
  return c;
}

RLConfig RLConfig::FromJson(const nlohmann::json &j) { return FromJson(j, RLConfig()); }

void RLConfig::Validate() const {
  if (alpha == 0.0 && beta == 0.0 && gamma == 0.0) {
    throw ConfigError("at least one of alpha, beta and gamma must be nonzero");
  }
  if (w_unk < 0.0) throw ConfigError("w_unk must be >= 0");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) {
    throw ConfigError("baseline_decay must lie in [0, 1)");
  }
  if (batch_size < 1 || epochs < 0) throw ConfigError("batch_size and epochs must be valid");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
}

void ModelTriple::Validate() const {
  if (a == nullptr || b == nullptr || c == nullptr) {
    throw ConfigError("models A, B and C are all required");
  }
  if (a->kind() != b->kind() || a->kind() != c->kind()) {
    throw ConfigError("models A, B and C must be of the same kind");
  }
}

Predictions PredictAll(const ModelTriple &models, const std::vector<std::string> &tokens) {
  models.Validate();
  if (tokens.empty()) throw ShapeError("cannot predict on an empty sentence");
  return {models.a->Predict(tokens), models.b->Predict(tokens), models.c->Predict(tokens)};
}

double StructureReward(const Predictions &p) {
  // Validates lengths and emptiness.
  structpred::Agreement(p.a, p.b);
  structpred::Agreement(p.a, p.c);
  // Summing integer counts keeps the result exactly inside [-1, 1].
  long matches = 0;
  for (size_t i = 0; i < p.a.size(); ++i) {
    matches += (p.b[i] == p.c[i]) - (p.a[i] == p.b[i]) - (p.a[i] == p.c[i]);
  }
  return static_cast<double>(matches) / static_cast<double>(p.a.size());
}

double StructureReward(const std::vector<std::string> &tokens, const ModelTriple &models) {
  return StructureReward(PredictAll(models, tokens));
}

harness::RewardBreakdown Combine(double s_p, double perplexity, double s_m, double unk_rate,
                                 const RLConfig &config) {
  harness::RewardBreakdown r;
  r.alpha = config.alpha;
  r.beta = config.beta;
  r.gamma = config.gamma;
  r.w_unk = config.w_unk;
  r.s_p = s_p;
  r.s_f = -perplexity;
  r.s_m = s_m;
  r.unk_penalty = -config.w_unk * unk_rate;
  r.total = r.alpha * r.s_p + r.beta * r.s_f + r.gamma * r.s_m + r.unk_penalty;
  return r;
}

harness::RewardBreakdown CompositeReward(const std::vector<std::string> &x,
                                         const std::vector<std::string> &x_hat,
                                         const ModelTriple &models, const Scorers &scorers,
                                         const RLConfig &config, Predictions *predictions) {
  if (x_hat.empty()) throw ShapeError("cannot reward an empty generated sentence");
  if (scorers.lm == nullptr || scorers.embedder == nullptr) {
    throw ConfigError("a language model and an embedder are required");
  }
  const Predictions p = PredictAll(models, x_hat);
  if (predictions != nullptr) *predictions = p;
  int unk = 0;
  for (const auto &t : x_hat) unk += t == treebank::kUnkToken;
  return Combine(StructureReward(p), scorers.lm->Perplexity(x_hat),
                 quality::SimScore(x, x_hat, *scorers.embedder),
                 static_cast<double>(unk) / static_cast<double>(x_hat.size()), config);
}

}  // namespace spad::genattack
