#include "spad/harness/defense.h"

#include <algorithm>
#include <numeric>

#include "spad/base/error.h"
#include "spad/base/parallel.h"
#include "spad/base/rng.h"

namespace spad::harness {

using structpred::Model;
using structpred::ModelKind;
using treebank::Corpus;
using treebank::Sentence;

void FillPredictions(std::vector<AdvRecord> &records, const genattack::ModelTriple &models,
                     int jobs) {
  models.Validate();
  const std::string kind(structpred::KindName(models.a->kind()));
  ParallelFor(records.size(), jobs, [&](size_t i) {
    AdvRecord &r = records[i];
    if (r.generated.empty()) {
      throw ValidityError("record " + r.id + ": empty generated sentence");
    }
    r.kind = kind;
    genattack::Predictions p = genattack::PredictAll(models, r.generated);
    r.pred_a = std::move(p.a);
    r.pred_b = std::move(p.b);
    r.pred_c = std::move(p.c);
    if (r.victim_original.empty() && !r.original.empty()) {
      r.victim_original = models.a->Predict(r.original);
    }
  });
}

std::vector<AdvRecord> OriginRecords(const Corpus &corpus, const genattack::ModelTriple &models,
                                     int jobs) {
  std::vector<AdvRecord> records(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    records[i].id = corpus[i].id;
    records[i].original = corpus[i].tokens;
    records[i].generated = corpus[i].tokens;
  }
  FillPredictions(records, models, jobs);
  for (AdvRecord &r : records) r.victim_original = r.pred_a;
  return records;
}

Sentence PseudoLabel(const AdvRecord &record) {
  record.Validate();
  Sentence s;
  s.id = record.id;
  s.tokens = record.generated;
  if (record.kind == "parser") {
    s.gold_tree = treebank::DepTree{record.pred_b, {}};
  } else {
    s.gold_tags = treebank::TagSeq{record.pred_b};
  }
  s.Validate();
  return s;
}

FilterResult ConsensusFilter(const std::vector<AdvRecord> &records, int cap) {
  FilterResult out;
  for (size_t i = 0; i < records.size(); ++i) {
    if (cap >= 0 && out.kept.size() >= static_cast<size_t>(cap)) break;
    const AdvRecord &r = records[i];
    if (r.pred_b == r.pred_c && r.pred_b != r.pred_a) {
      out.corpus.push_back(PseudoLabel(r));
      out.kept.push_back(i);
    }
  }
  return out;
}

std::string_view SampleModeName(SampleMode m) {
  return m == SampleMode::kBC ? "bc" : "abc";
}

SampleMode SampleModeFromName(std::string_view name) {
  if (name == "bc") return SampleMode::kBC;
  if (name == "abc") return SampleMode::kABC;
  throw ConfigError("unknown sample mode '" + std::string(name) + "' (expected bc or abc)");
}

SampleResult SampleConsensusCorpus(const Corpus &pool, const genattack::ModelTriple &models,
                                   SampleMode mode, int k, uint64_t seed, int jobs) {
  if (pool.empty()) throw PreconditionError("cannot sample from an empty pool");
  if (k < 0) throw PreconditionError("sample size must be >= 0");
  std::vector<AdvRecord> records = OriginRecords(pool, models, jobs);
  std::vector<size_t> qualifying;
  for (size_t i = 0; i < records.size(); ++i) {
    const AdvRecord &r = records[i];
    if (r.pred_b != r.pred_c) continue;
    if (mode == SampleMode::kABC && r.pred_a == r.pred_b) continue;
    qualifying.push_back(i);
  }
  SampleResult out;
  out.qualifying = static_cast<long>(qualifying.size());
  out.shortfall = qualifying.size() < static_cast<size_t>(k);
  if (!out.shortfall) {
    const uint64_t base = Mix64(seed ^ Fnv1a64("consensus-sample"));
    auto key = [&](size_t i) { return std::make_pair(Mix64(base ^ Mix64(i)), i); };
    std::sort(qualifying.begin(), qualifying.end(),
              [&](size_t x, size_t y) { return key(x) < key(y); });
    qualifying.resize(k);
    std::sort(qualifying.begin(), qualifying.end());
  }
  for (size_t i : qualifying) out.corpus.push_back(PseudoLabel(records[i]));
  return out;
}

nlohmann::json RetrainConfig::ToJson() const {
  nlohmann::json j = {{"fine_tune", fine_tune}};
  j["learning_rate"] = learning_rate ? nlohmann::json(*learning_rate) : nlohmann::json();
  j["epochs"] = epochs ? nlohmann::json(*epochs) : nlohmann::json();
  return j;
}

RetrainConfig RetrainConfig::FromJson(const nlohmann::json &j) {
  if (!j.is_object()) throw ConfigError("retrain config must be a JSON object");
  RetrainConfig c;
  try {
    for (const auto &[key, value] : j.items()) {
      if (key == "fine_tune") {
        c.fine_tune = value.get<bool>();
      } else if (key == "learning_rate") {
        if (!value.is_null()) c.learning_rate = value.get<double>();
      } else if (key == "epochs") {
        if (!value.is_null()) c.epochs = value.get<int>();
      } else {
        throw ConfigError("unknown retrain config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("retrain config: ") + e.what());
  }
  if (c.learning_rate && !(*c.learning_rate > 0.0)) {
    throw ConfigError("retrain learning_rate must be > 0");
  }
  if (c.epochs && *c.epochs < 0) throw ConfigError("retrain epochs must be >= 0");
  return c;
}

Model AdversarialRetrain(const Model &victim, const Corpus &train, const Corpus &adv,
                         const RetrainConfig &config) {
  if (adv.empty()) throw PreconditionError("no adversarial examples to train on");
  for (const Sentence &s : adv) {
    const bool has = victim.kind() == ModelKind::kParser ? s.gold_tree.has_value()
                                                         : s.gold_tags.has_value();
    if (!has) {
      throw ConfigError("adversarial sentence " + s.id + " lacks " +
                        std::string(structpred::KindName(victim.kind())) + " annotation");
    }
  }
  Corpus mixed = train;
  mixed.insert(mixed.end(), adv.begin(), adv.end());
  if (!config.fine_tune) return Model::Train(mixed, victim.config());
  const double lr = config.learning_rate.value_or(victim.kind() == ModelKind::kParser
                                                      ? kParserFineTuneLearningRate
                                                      : kTaggerFineTuneLearningRate);
  return victim.FineTune(mixed, config.epochs.value_or(victim.config().epochs), lr);
}

}  // namespace spad::harness
