#include "spad/quality/lm.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spad/base/error.h"
#include "spad/base/rng.h"
#include "spad/nn/graph.h"
#include "spad/nn/optim.h"

namespace spad::quality {

using nn::Expr;
using nn::Graph;
using nn::Tensor;
using treebank::Corpus;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

constexpr std::pair<LmArch, const char *> kArchNames[] = {
    {LmArch::kNgram, "ngram"}, {LmArch::kRecurrent, "rnn"}, {LmArch::kUniform, "uniform"}};

const char *ArchName(LmArch a) {
  for (const auto &[arch, name] : kArchNames) {
    if (arch == a) return name;
  }
  return "unknown";
}

LmArch ArchFromName(const std::string &name) {
  for (const auto &[arch, n] : kArchNames) {
    if (name == n) return arch;
  }
  throw ConfigError("unknown language model architecture: " + name);
}

}  // namespace

// Interpolated Witten-Bell n-gram counts. Level k holds counts of a word
// after a context of k-1 words.
struct LanguageModel::Ngrams {
  struct Entry {
    double total = 0.0;
    std::map<int, double> next;
  };
  std::vector<std::map<std::vector<int>, Entry>> levels;  // index k-1

  void Add(const std::vector<int> &context, int word, double count) {
    const int k = static_cast<int>(context.size()) + 1;
    Entry &e = levels[k - 1][context];
    e.total += count;
    e.next[word] += count;
  }
};

struct LanguageModel::Rnn {
  mutable nn::ParamStore params;
  nn::LstmLayer lstm;
  nn::Linear out;
  Tensor mask;  // [1, V]; -inf on unpredictable ids

  Expr Logits(Graph &g, const std::vector<int> &inputs) const {
    Expr x = g.Lookup(params.Get("emb"), inputs);
    Expr h = lstm.Run(g, x, false);
    Expr logits = out(g, h);
    Tensor m(static_cast<int>(inputs.size()), mask.cols());
    for (int r = 0; r < m.rows(); ++r) {
      for (int c = 0; c < m.cols(); ++c) m(r, c) = mask(0, c);
    }
    return nn::AddConst(logits, m);
  }
};

nlohmann::json LmConfig::ToJson() const {
  return {{"arch", ArchName(arch)},
          {"order", order},
          {"embed_dim", embed_dim},
          {"hidden_dim", hidden_dim},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"seed", seed},
          {"min_count", min_count},
          {"heldout_fraction", heldout_fraction}};
}

LmConfig LmConfig::FromJson(const nlohmann::json &j) {
  if (!j.is_object()) throw ConfigError("LM config must be a JSON object");
  LmConfig c;
  const nlohmann::json known = c.ToJson();
  try {
    for (const auto &[k, v] : j.items()) {
      if (!known.contains(k)) throw ConfigError("unknown LM config key: " + k);
    }
    if (j.contains("arch")) c.arch = ArchFromName(j.at("arch").get<std::string>());
    c.order = j.value("order", c.order);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.seed = j.value("seed", c.seed);
    c.min_count = j.value("min_count", c.min_count);
    c.heldout_fraction = j.value("heldout_fraction", c.heldout_fraction);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed LM config: ") + e.what());
  }
  c.Validate();
  return c;
}

void LmConfig::Validate() const {
  if (order < 1) throw ConfigError("n-gram order must be >= 1");
  if (embed_dim < 1 || hidden_dim < 1 || epochs < 0 || batch_size < 1) {
    throw ConfigError("LM dimensions, epochs and batch size must be valid");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0)) {
    throw ConfigError("heldout_fraction must lie in [0, 1)");
  }
}

LanguageModel::LanguageModel() = default;
LanguageModel::~LanguageModel() = default;
LanguageModel::LanguageModel(LanguageModel &&) = default;
LanguageModel &LanguageModel::operator=(LanguageModel &&) = default;

bool LanguageModel::Predictable(int id) {
  return id != treebank::kPadId && id != treebank::kBosId &&
         id != treebank::kRootId && id != treebank::kMaskId;
}

int LanguageModel::support_size() const {
  int n = 0;
  for (int id = 0; id < vocab_.size(); ++id) n += Predictable(id);
  return n;
}

LanguageModel LanguageModel::Uniform(const treebank::Vocabulary &vocab) {
  LanguageModel lm;
  lm.config_.arch = LmArch::kUniform;
  lm.vocab_ = vocab;
  lm.heldout_ppl_ = lm.support_size();
  return lm;
}

LanguageModel LanguageModel::Train(const Corpus &corpus, const LmConfig &config) {
  config.Validate();
  if (corpus.empty()) throw ConfigError("cannot train a language model on an empty corpus");
  const size_t heldout = static_cast<size_t>(
      std::floor(config.heldout_fraction * static_cast<double>(corpus.size())));
  const Corpus train(corpus.begin(), corpus.end() - heldout);
  const Corpus dev(corpus.end() - heldout, corpus.end());
  if (train.empty()) throw ConfigError("held-out split leaves no training data");
  LanguageModel lm;
  lm.config_ = config;
  lm.vocab_ = treebank::Vocabulary::Build(train, config.min_count);
  switch (config.arch) {
    case LmArch::kNgram:
      lm.TrainNgram(train);
      break;
    case LmArch::kRecurrent:
      lm.TrainRnn(train);
      break;
    case LmArch::kUniform:
      break;
  }
  lm.heldout_ppl_ = dev.empty() ? 0.0 : lm.MeanPerplexity(dev);
  return lm;
}

void LanguageModel::TrainNgram(const Corpus &corpus) {
  const int order = config_.order;
  ngrams_ = std::make_unique<Ngrams>();
  ngrams_->levels.resize(order);
  for (const auto &s : corpus) {
    std::vector<int> ids(order - 1, treebank::kBosId);
    for (int id : vocab_.Lookup(s.tokens)) ids.push_back(id);
    ids.push_back(treebank::kEosId);
    for (size_t i = order - 1; i < ids.size(); ++i) {
      for (int k = 1; k <= order; ++k) {
        std::vector<int> context(ids.begin() + (i - k + 1), ids.begin() + i);
        ngrams_->Add(context, ids[i], 1.0);
      }
    }
  }
}

void LanguageModel::TrainRnn(const Corpus &corpus) {
  const int v = vocab_.size();
  rnn_ = std::make_unique<Rnn>();
  Rng init = Rng::Derive(config_.seed, "lm-init");
  rnn_->params.AddUniform("emb", v, config_.embed_dim, 0.1, init);
  rnn_->lstm = nn::LstmLayer(rnn_->params, "lstm", config_.embed_dim,
                             config_.hidden_dim, init);
  rnn_->out = nn::Linear(rnn_->params, "out", config_.hidden_dim, v, init);
  rnn_->mask = Tensor(1, v);
  for (int id = 0; id < v; ++id) {
    if (!Predictable(id)) rnn_->mask(0, id) = kNegInf;
  }
  nn::AdamConfig adam_config;
  adam_config.learning_rate = config_.learning_rate;
  nn::AdamState adam(rnn_->params, adam_config);
  Rng shuffle = Rng::Derive(config_.seed, "lm-shuffle");
  std::vector<size_t> order(corpus.size());
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.UniformInt(i)]);
    }
    for (size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
      const size_t end = std::min(order.size(), begin + config_.batch_size);
      Graph g(true);
      std::vector<Expr> losses;
      size_t tokens = 0;
      for (size_t k = begin; k < end; ++k) {
        losses.push_back(IdsLogLik(g, vocab_.Lookup(corpus[order[k]].tokens), &tokens));
      }
      Expr total = nn::Sum(nn::ConcatRows(losses));
      g.Backward(nn::Scale(total, -1.0 / static_cast<double>(tokens)));
      adam.Step(rnn_->params);
    }
  }
  rnn_->params.RoundToFloat();
}

Expr LanguageModel::IdsLogLik(Graph &g, const std::vector<int> &ids, size_t *tokens) const {
  std::vector<int> inputs = {treebank::kBosId};
  inputs.insert(inputs.end(), ids.begin(), ids.end());
  std::vector<int> targets(inputs.begin() + 1, inputs.end());
  targets.push_back(treebank::kEosId);
  Expr logp = nn::LogSoftmax(rnn_->Logits(g, inputs));
  *tokens += targets.size();
  return nn::Sum(nn::Pick(logp, targets));
}

Expr LanguageModel::SentenceNll(Graph &g, const std::vector<std::string> &tokens) const {
  if (!rnn_) throw ConfigError("SentenceNll needs the recurrent language model");
  if (tokens.empty()) throw ShapeError("cannot score an empty sentence");
  size_t count = 0;
  return nn::Scale(IdsLogLik(g, vocab_.Lookup(tokens), &count), -1.0);
}

nn::ParamStore &LanguageModel::params() const {
  if (!rnn_) throw ConfigError("only the recurrent language model has parameters");
  return rnn_->params;
}

std::vector<double> LanguageModel::NextDistribution(const std::vector<int> &history) const {
  const int v = vocab_.size();
  const int support = support_size();
  std::vector<double> p(v, 0.0);
  for (int id = 0; id < v; ++id) {
    if (Predictable(id)) p[id] = 1.0 / support;
  }
  if (config_.arch == LmArch::kNgram) {
    const int order = config_.order;
    std::vector<int> padded(order - 1, treebank::kBosId);
    padded.insert(padded.end(), history.begin(), history.end());
    for (int k = 1; k <= order; ++k) {
      std::vector<int> context(padded.end() - (k - 1), padded.end());
      auto it = ngrams_->levels[k - 1].find(context);
      if (it == ngrams_->levels[k - 1].end()) break;
      const Ngrams::Entry &e = it->second;
      const double distinct = static_cast<double>(e.next.size());
      const double denom = e.total + distinct;
      for (double &x : p) x = distinct * x / denom;
      for (const auto &[w, c] : e.next) p[w] += c / denom;
    }
  } else if (config_.arch == LmArch::kRecurrent) {
    std::vector<int> inputs = {treebank::kBosId};
    inputs.insert(inputs.end(), history.begin(), history.end());
    Graph g;
    const Tensor probs = nn::Softmax(rnn_->Logits(g, inputs)).value();
    const int last = probs.rows() - 1;
    for (int id = 0; id < v; ++id) p[id] = probs(last, id);
  }
  return p;
}

std::vector<double> LanguageModel::SentenceLogProbs(const std::vector<int> &ids) const {
  std::vector<int> targets = ids;
  targets.push_back(treebank::kEosId);
  std::vector<double> out;
  out.reserve(targets.size());
  if (config_.arch == LmArch::kUniform) {
    out.assign(targets.size(), -std::log(static_cast<double>(support_size())));
  } else if (config_.arch == LmArch::kNgram) {
    const int order = config_.order;
    std::vector<int> padded(order - 1, treebank::kBosId);
    padded.insert(padded.end(), targets.begin(), targets.end());
    const double uniform = 1.0 / support_size();
    for (size_t i = order - 1; i < padded.size(); ++i) {
      const int w = padded[i];
      double p = uniform;
      for (int k = 1; k <= order; ++k) {
        std::vector<int> context(padded.begin() + (i - k + 1), padded.begin() + i);
        auto it = ngrams_->levels[k - 1].find(context);
        if (it == ngrams_->levels[k - 1].end()) break;
        const Ngrams::Entry &e = it->second;
        const double distinct = static_cast<double>(e.next.size());
        auto c = e.next.find(w);
        const double count = c == e.next.end() ? 0.0 : c->second;
        p = (count + distinct * p) / (e.total + distinct);
      }
      out.push_back(std::log(p));
    }
  } else {
    std::vector<int> inputs = {treebank::kBosId};
    inputs.insert(inputs.end(), ids.begin(), ids.end());
    Graph g;
    const Tensor logp = nn::LogSoftmax(rnn_->Logits(g, inputs)).value();
    for (size_t i = 0; i < targets.size(); ++i) {
      out.push_back(logp(static_cast<int>(i), targets[i]));
    }
  }
  return out;
}

double LanguageModel::LogProb(const std::vector<std::string> &tokens) const {
  double total = 0.0;
  for (double lp : SentenceLogProbs(vocab_.Lookup(tokens))) total += lp;
  return total;
}

double LanguageModel::Perplexity(const std::vector<std::string> &tokens) const {
  if (tokens.empty()) throw ShapeError("perplexity of an empty sentence");
  return std::exp(-LogProb(tokens) / static_cast<double>(tokens.size() + 1));
}

double LanguageModel::MeanPerplexity(const Corpus &corpus) const {
  if (corpus.empty()) throw ShapeError("perplexity of an empty corpus");
  double total = 0.0;
  for (const auto &s : corpus) total += Perplexity(s.tokens);
  return total / static_cast<double>(corpus.size());
}

nn::Checkpoint LanguageModel::ToCheckpoint() const {
  nn::Checkpoint ck;
  ck.kind = "lm";
  ck.flavor = ArchName(config_.arch);
  ck.meta["config"] = config_.ToJson();
  ck.meta["vocab"] = vocab_.tokens();
  ck.meta["heldout_perplexity"] = heldout_ppl_;
  if (config_.arch == LmArch::kNgram) {
    for (int k = 1; k <= config_.order; ++k) {
      std::vector<double> rows;
      int count = 0;
      for (const auto &[context, e] : ngrams_->levels[k - 1]) {
        for (const auto &[w, c] : e.next) {
          rows.insert(rows.end(), context.begin(), context.end());
          rows.push_back(w);
          rows.push_back(c);
          ++count;
        }
      }
      ck.tensors.emplace_back("ngram." + std::to_string(k),
                              Tensor({count, k + 1}, std::move(rows)));
    }
  } else if (config_.arch == LmArch::kRecurrent) {
    nn::AppendParams(rnn_->params, ck);
  }
  return ck;
}

LanguageModel LanguageModel::FromCheckpoint(const nn::Checkpoint &ck) {
  nn::ExpectKind(ck, "lm");
  LanguageModel lm;
  try {
    lm.config_ = LmConfig::FromJson(ck.meta.at("config"));
    lm.vocab_ = treebank::Vocabulary::FromTokens(
        ck.meta.at("vocab").get<std::vector<std::string>>(), lm.config_.min_count);
    lm.heldout_ppl_ = ck.meta.at("heldout_perplexity").get<double>();
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("bad LM metadata: ") + e.what());
  }
  if (lm.config_.arch == LmArch::kNgram) {
    lm.ngrams_ = std::make_unique<Ngrams>();
    lm.ngrams_->levels.resize(lm.config_.order);
    for (int k = 1; k <= lm.config_.order; ++k) {
      const Tensor &t = ck.Find("ngram." + std::to_string(k));
      if (t.cols() != k + 1 && t.rows() > 0) throw FormatError("bad n-gram table");
      for (int r = 0; r < t.rows(); ++r) {
        std::vector<int> context;
        for (int c = 0; c < k - 1; ++c) context.push_back(static_cast<int>(t(r, c)));
        lm.ngrams_->Add(context, static_cast<int>(t(r, k - 1)), t(r, k));
      }
    }
  } else if (lm.config_.arch == LmArch::kRecurrent) {
    lm.rnn_ = std::make_unique<Rnn>();
    lm.rnn_->params = nn::ParamsFromCheckpoint(ck);
    lm.rnn_->lstm = nn::LstmLayer::Bind(lm.rnn_->params, "lstm");
    lm.rnn_->out = nn::Linear::Bind(lm.rnn_->params, "out");
    const int v = lm.vocab_.size();
    lm.rnn_->mask = Tensor(1, v);
    for (int id = 0; id < v; ++id) {
      if (!Predictable(id)) lm.rnn_->mask(0, id) = kNegInf;
    }
  }
  return lm;
}

LanguageModel LanguageModel::Load(const std::string &path) {
  return FromCheckpoint(nn::LoadCheckpoint(path));
}

void LanguageModel::Save(const std::string &path) const {
  nn::SaveCheckpoint(path, ToCheckpoint());
}

}  // namespace spad::quality
