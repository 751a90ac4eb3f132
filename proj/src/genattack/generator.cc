#include "spad/genattack/generator.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spad/base/error.h"
#include "spad/nn/optim.h"

namespace spad::genattack {

using nn::Expr;
using nn::Graph;
using nn::Tensor;
using treebank::Corpus;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <typename T>
void CheckKeys(const nlohmann::json &j, const T &defaults, const char *what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  const nlohmann::json known = defaults.ToJson();
  for (const auto &[k, v] : j.items()) {
    if (!known.contains(k)) throw ConfigError(std::string("unknown ") + what + " key: " + k);
  }
}

}  // namespace

nlohmann::json GeneratorConfig::ToJson() const {
  return {{"embed_dim", embed_dim}, {"hidden_dim", hidden_dim}, {"layers", layers},
          {"max_length", max_length}, {"min_count", min_count}, {"seed", seed}};
}

GeneratorConfig GeneratorConfig::FromJson(const nlohmann::json &j) {
  GeneratorConfig c;
  CheckKeys(j, c, "generator config");
  try {
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.layers = j.value("layers", c.layers);
    c.max_length = j.value("max_length", c.max_length);
    c.min_count = j.value("min_count", c.min_count);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed generator config: ") + e.what());
  }
  c.Validate();
  return c;
}

void GeneratorConfig::Validate() const {
  if (embed_dim < 1 || hidden_dim < 1 || layers < 1 || max_length < 1 || min_count < 1) {
    throw ConfigError("generator dimensions, depth, max_length and min_count must be >= 1");
  }
}

nlohmann::json DaeConfig::ToJson() const {
  return {{"mask_prob", mask_prob}, {"epochs", epochs}, {"batch_size", batch_size},
          {"learning_rate", learning_rate}, {"seed", seed}};
}

DaeConfig DaeConfig::FromJson(const nlohmann::json &j) {
  DaeConfig c;
  CheckKeys(j, c, "pretraining config");
  try {
    c.mask_prob = j.value("mask_prob", c.mask_prob);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed pretraining config: ") + e.what());
  }
  c.Validate();
  return c;
}

void DaeConfig::Validate() const {
  if (!(mask_prob >= 0.0 && mask_prob < 1.0)) {
    throw ConfigError("mask_prob must lie in [0, 1)");
  }
  if (epochs < 0 || batch_size < 1) throw ConfigError("epochs and batch_size must be valid");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
}

bool Generator::Emittable(int id) {
  return id != treebank::kPadId && id != treebank::kBosId && id != treebank::kRootId &&
         id != treebank::kMaskId;
}

Generator Generator::Create(treebank::Vocabulary vocab, const GeneratorConfig &config) {
  config.Validate();
  Generator gen;
  gen.config_ = config;
  gen.vocab_ = std::move(vocab);
  const int v = gen.vocab_.size();
  const int e = config.embed_dim, h = config.hidden_dim;
  Rng init = Rng::Derive(config.seed, "generator-init");
  nn::ParamStore &p = gen.params_;
  p.AddUniform("emb", v, e, 0.1, init);
  gen.encoder_ = nn::BiLstm(p, "enc", e, h, config.layers, init);
  for (int l = 0; l < config.layers; ++l) {
    gen.decoder_.emplace_back(p, "dec.l" + std::to_string(l), l == 0 ? e : h, h, init);
    gen.bridge_.emplace_back(p, "bridge.l" + std::to_string(l), 2 * h, h, init);
  }
  gen.attention_ = nn::Linear(p, "attn", 2 * h, h, init, false);
  gen.combine_ = nn::Linear(p, "combine", 3 * h, h, init);
  gen.out_ = nn::Linear(p, "out", h, v, init);
  p.RoundToFloat();
  gen.Bind();
  return gen;
}

Generator Generator::Create(const Corpus &corpus, const GeneratorConfig &config) {
  if (corpus.empty()) throw ConfigError("cannot build a generator vocabulary from no data");
  return Create(treebank::Vocabulary::Build(corpus, config.min_count), config);
}

void Generator::Bind() {
  encoder_ = nn::BiLstm::Bind(params_, "enc", config_.layers);
  decoder_.clear();
  bridge_.clear();
  for (int l = 0; l < config_.layers; ++l) {
    decoder_.push_back(nn::LstmLayer::Bind(params_, "dec.l" + std::to_string(l)));
    bridge_.push_back(nn::Linear::Bind(params_, "bridge.l" + std::to_string(l)));
  }
  attention_ = nn::Linear::Bind(params_, "attn", false);
  combine_ = nn::Linear::Bind(params_, "combine");
  out_ = nn::Linear::Bind(params_, "out");
  const int v = vocab_.size();
  if (out_.out() != v || params_.Get("emb").value.rows() != v) {
    throw FormatError("generator parameters do not match the vocabulary");
  }
  mask_ = Tensor(1, v);
  for (int id = 0; id < v; ++id) {
    if (!Emittable(id)) mask_(0, id) = kNegInf;
  }
}

Generator::Encoded Generator::Encode(Graph &g, const std::vector<int> &source) const {
  if (source.empty()) throw ShapeError("cannot encode an empty sentence");
  Expr x = g.Lookup(params_.Get("emb"), source);
  Expr states = encoder_(g, x, 0.0, nullptr);
  Encoded enc{states, attention_(g, states), {}};
  Expr summary = nn::MeanRows(states);
  for (size_t l = 0; l < decoder_.size(); ++l) {
    enc.initial.push_back({nn::Tanh(bridge_[l](g, summary)),
                           g.Input(Tensor(1, decoder_[l].hidden()))});
  }
  return enc;
}

Expr Generator::Readout(Graph &g, const Encoded &enc, Expr dec) const {
  Expr weights = nn::Softmax(nn::MatMul(dec, nn::Transpose(enc.keys)));
  Expr context = nn::MatMul(weights, enc.states);
  Expr combined = nn::Tanh(combine_(g, nn::ConcatCols({dec, context})));
  Expr logits = out_(g, combined);
  Tensor m(logits.rows(), mask_.cols());
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) m(r, c) = mask_(0, c);
  }
  return nn::AddConst(logits, m);
}

Expr Generator::SequenceLogProb(Graph &g, const std::vector<int> &source,
                                const std::vector<int> &output) const {
  const int max_len = config_.max_length;
  if (static_cast<int>(output.size()) > max_len) {
    throw ShapeError("output longer than max_length");
  }
  for (int id : output) {
    if (id < 0 || id >= vocab_.size() || !Emittable(id) || id == treebank::kEosId) {
      throw ShapeError("output id " + std::to_string(id) + " cannot be emitted");
    }
  }
  std::vector<int> targets = output;
  if (static_cast<int>(output.size()) < max_len) targets.push_back(treebank::kEosId);
  std::vector<int> inputs = {treebank::kBosId};
  inputs.insert(inputs.end(), targets.begin(), targets.end() - 1);
  const Encoded enc = Encode(g, source);
  Expr x = g.Lookup(params_.Get("emb"), inputs);
  for (size_t l = 0; l < decoder_.size(); ++l) {
    x = decoder_[l].Run(g, x, false, enc.initial[l]);
  }
  Expr logp = nn::LogSoftmax(Readout(g, enc, x));
  return nn::Sum(nn::Pick(logp, targets));
}

Tensor Generator::StepDistributions(const std::vector<int> &source,
                                    const std::vector<int> &prefix) const {
  Graph g(false, false);
  std::vector<int> inputs = {treebank::kBosId};
  inputs.insert(inputs.end(), prefix.begin(), prefix.end());
  const Encoded enc = Encode(g, source);
  Expr x = g.Lookup(params_.Get("emb"), inputs);
  for (size_t l = 0; l < decoder_.size(); ++l) {
    x = decoder_[l].Run(g, x, false, enc.initial[l]);
  }
  return nn::Softmax(Readout(g, enc, x)).value();
}

std::vector<int> Generator::Decode(const std::vector<int> &source, Rng *rng,
                                   double temperature) const {
  if (rng != nullptr && !(temperature > 0.0)) {
    throw ConfigError("sampling temperature must be > 0");
  }
  Graph g(false, false);
  const Encoded enc = Encode(g, source);
  std::vector<nn::LstmState> state = enc.initial;
  std::vector<int> out;
  int prev = treebank::kBosId;
  const int v = vocab_.size();
  while (static_cast<int>(out.size()) < config_.max_length) {
    const int ids[1] = {prev};
    Expr x = g.Lookup(params_.Get("emb"), ids);
    for (size_t l = 0; l < decoder_.size(); ++l) {
      state[l] = decoder_[l].Step(g, x, state[l]);
      x = state[l].h;
    }
    const Tensor logits = Readout(g, enc, x).value();
    int next = 0;
    if (rng == nullptr) {
      for (int id = 1; id < v; ++id) {
        if (logits(0, id) > logits(0, next)) next = id;
      }
    } else {
      double top = kNegInf;
      for (int id = 0; id < v; ++id) top = std::max(top, logits(0, id));
      std::vector<double> p(v);
      double total = 0.0;
      for (int id = 0; id < v; ++id) {
        p[id] = std::exp((logits(0, id) - top) / temperature);
        total += p[id];
      }
      for (double &q : p) q /= total;
      next = nn::SampleCategorical(p, *rng);
    }
    if (next == treebank::kEosId) break;
    out.push_back(next);
    prev = next;
  }
  return out;
}

std::vector<int> Generator::GreedyIds(const std::vector<int> &source) const {
  return Decode(source, nullptr, 1.0);
}

std::vector<int> Generator::SampleIds(const std::vector<int> &source, Rng &rng,
                                      double temperature) const {
  return Decode(source, &rng, temperature);
}

std::vector<int> Generator::Ids(const std::vector<std::string> &tokens) const {
  return vocab_.Lookup(tokens);
}

std::vector<std::string> Generator::Tokens(const std::vector<int> &ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(vocab_.Token(id));
  return out;
}

std::vector<std::string> Generator::Generate(const std::vector<std::string> &tokens) const {
  return Tokens(GreedyIds(Ids(tokens)));
}

std::vector<std::string> Generator::Generate(const std::vector<std::string> &tokens,
                                             Rng &rng, double temperature) const {
  return Tokens(SampleIds(Ids(tokens), rng, temperature));
}

std::vector<double> Generator::PretrainDae(const Corpus &corpus, const DaeConfig &config) {
  config.Validate();
  if (corpus.empty()) throw ConfigError("cannot pretrain on an empty corpus");
  nn::AdamConfig adam_config;
  adam_config.learning_rate = config.learning_rate;
  nn::AdamState adam(params_, adam_config);
  Rng shuffle = Rng::Derive(config.seed, "dae-shuffle");
  Rng noise = Rng::Derive(config.seed, "dae-mask");
  std::vector<size_t> order(corpus.size());
  std::vector<double> curve;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.UniformInt(i)]);
    }
    double epoch_loss = 0.0;
    size_t epoch_tokens = 0;
    for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const size_t end = std::min(order.size(), begin + config.batch_size);
      Graph g(true);
      std::vector<Expr> losses;
      size_t tokens = 0;
      for (size_t k = begin; k < end; ++k) {
        std::vector<int> target = Ids(corpus[order[k]].tokens);
        if (static_cast<int>(target.size()) > config_.max_length) {
          target.resize(config_.max_length);
        }
        std::vector<int> source = Ids(corpus[order[k]].tokens);
        for (int &id : source) {
          if (noise.Bernoulli(config.mask_prob)) id = treebank::kMaskId;
        }
        losses.push_back(SequenceLogProb(g, source, target));
        tokens += target.size() + (static_cast<int>(target.size()) < config_.max_length);
      }
      Expr total = losses.size() == 1 ? losses[0] : nn::Sum(nn::ConcatRows(losses));
      epoch_loss -= total.value().scalar();
      epoch_tokens += tokens;
      g.Backward(nn::Scale(total, -1.0 / static_cast<double>(tokens)));
      adam.Step(params_);
    }
    curve.push_back(epoch_loss / static_cast<double>(epoch_tokens));
  }
  params_.RoundToFloat();
  curve_.insert(curve_.end(), curve.begin(), curve.end());
  return curve;
}

nn::Checkpoint Generator::ToCheckpoint() const {
  nn::Checkpoint ck;
  ck.kind = "generator";
  ck.flavor = "attention_seq2seq";
  ck.meta["config"] = config_.ToJson();
  ck.meta["vocab"] = vocab_.tokens();
  ck.meta["pretrain_curve"] = curve_;
  nn::AppendParams(params_, ck);
  return ck;
}

Generator Generator::FromCheckpoint(const nn::Checkpoint &ck) {
  nn::ExpectKind(ck, "generator");
  Generator gen;
  try {
    gen.config_ = GeneratorConfig::FromJson(ck.meta.at("config"));
    gen.vocab_ = treebank::Vocabulary::FromTokens(
        ck.meta.at("vocab").get<std::vector<std::string>>(), gen.config_.min_count);
    gen.curve_ = ck.meta.value("pretrain_curve", std::vector<double>{});
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("bad generator metadata: ") + e.what());
  }
  gen.params_ = nn::ParamsFromCheckpoint(ck);
  gen.Bind();
  return gen;
}

Generator Generator::Load(const std::string &path) {
  return FromCheckpoint(nn::LoadCheckpoint(path));
}

void Generator::Save(const std::string &path) const {
  nn::SaveCheckpoint(path, ToCheckpoint());
}

}  // namespace spad::genattack
