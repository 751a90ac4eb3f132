#include "spad/structpred/model.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "spad/base/error.h"
#include "spad/nn/optim.h"
#include "spad/structpred/agreement.h"

namespace spad::structpred {

using nn::Expr;
using nn::Graph;
using nn::Tensor;
using treebank::Corpus;
using treebank::DepTree;
using treebank::Sentence;
using treebank::TagSeq;

namespace {

constexpr std::pair<Flavor, std::string_view> kFlavorNames[] = {
    {Flavor::kRecurrentBiaffineCle, "RECURRENT_BIAFFINE_CLE"},
    {Flavor::kRecurrentBiaffineEisner, "RECURRENT_BIAFFINE_EISNER"},
    {Flavor::kWindowFeedforwardGreedy, "WINDOW_FEEDFORWARD_GREEDY"},
    {Flavor::kRecurrentSoftmax, "RECURRENT_SOFTMAX"},
    {Flavor::kWindowFeedforward, "WINDOW_FEEDFORWARD"},
    {Flavor::kHmmViterbi, "HMM_VITERBI"},
};

bool IsRecurrent(Flavor f) {
  return f == Flavor::kRecurrentBiaffineCle ||
         f == Flavor::kRecurrentBiaffineEisner || f == Flavor::kRecurrentSoftmax;
}

bool IsWindow(Flavor f) {
  return f == Flavor::kWindowFeedforwardGreedy || f == Flavor::kWindowFeedforward;
}

int ArgMax(const Tensor &t, int row) {
  int best = 0;
  for (int c = 1; c < t.cols(); ++c) {
    if (t(row, c) > t(row, best)) best = c;
  }
  return best;
}

}  // namespace

std::string_view FlavorName(Flavor f) {
  for (const auto &[flavor, name] : kFlavorNames) {
    if (flavor == f) return name;
  }
  return "UNKNOWN";
}

Flavor FlavorFromName(std::string_view name) {
  for (const auto &[flavor, n] : kFlavorNames) {
    if (n == name) return flavor;
  }
  throw ConfigError("unknown model flavor: " + std::string(name));
}

ModelKind KindOf(Flavor f) {
  switch (f) {
    case Flavor::kRecurrentBiaffineCle:
    case Flavor::kRecurrentBiaffineEisner:
    case Flavor::kWindowFeedforwardGreedy:
      return ModelKind::kParser;
    default:
      return ModelKind::kTagger;
  }
}

std::string_view KindName(ModelKind k) {
  return k == ModelKind::kParser ? "parser" : "tagger";
}

ModelConfig ModelConfig::Default(Flavor f) {
  ModelConfig c;
  c.flavor = f;
  switch (f) {
    case Flavor::kRecurrentBiaffineCle:
      break;
    case Flavor::kRecurrentBiaffineEisner:
      c.embed_dim = 48;
      c.hidden_dim = 48;
      c.layers = 2;
      c.arc_dim = 48;
      c.dropout = 0.25;
      c.seed = 2;
      break;
    case Flavor::kWindowFeedforwardGreedy:
      c.embed_dim = 48;
      c.hidden_dim = 128;
      c.window = 3;
      c.dropout = 0.1;
      c.seed = 3;
      break;
    case Flavor::kRecurrentSoftmax:
      c.embed_dim = 48;
      c.hidden_dim = 48;
      c.epochs = 6;
      break;
    case Flavor::kWindowFeedforward:
      c.embed_dim = 48;
      c.hidden_dim = 96;
      c.window = 2;
      c.dropout = 0.1;
      c.epochs = 8;
      c.seed = 2;
      break;
    case Flavor::kHmmViterbi:
      c.epochs = 1;
      c.seed = 3;
      break;
  }
  return c;
}

nlohmann::json ModelConfig::ToJson() const {
  return {{"flavor", std::string(FlavorName(flavor))},
          {"embed_dim", embed_dim},
          {"hidden_dim", hidden_dim},
          {"layers", layers},
          {"arc_dim", arc_dim},
          {"window", window},
          {"distance_buckets", distance_buckets},
          {"dropout", dropout},
          {"word_dropout", word_dropout},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"seed", seed},
          {"min_count", min_count},
          {"hmm_smoothing", hmm_smoothing}};
}

ModelConfig ModelConfig::FromJson(const nlohmann::json &j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  if (!j.contains("flavor")) throw ConfigError("model config needs a flavor");
  ModelConfig c = Default(FlavorFromName(j.at("flavor").get<std::string>()));
  const nlohmann::json known = c.ToJson();
  try {
    for (const auto &[k, v] : j.items()) {
      if (!known.contains(k)) throw ConfigError("unknown model config key: " + k);
    }
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.layers = j.value("layers", c.layers);
    c.arc_dim = j.value("arc_dim", c.arc_dim);
    c.window = j.value("window", c.window);
    c.distance_buckets = j.value("distance_buckets", c.distance_buckets);
    c.dropout = j.value("dropout", c.dropout);
    c.word_dropout = j.value("word_dropout", c.word_dropout);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.seed = j.value("seed", c.seed);
    c.min_count = j.value("min_count", c.min_count);
    c.hmm_smoothing = j.value("hmm_smoothing", c.hmm_smoothing);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  c.Validate();
  return c;
}

void ModelConfig::Validate() const {
  if (embed_dim < 1 || hidden_dim < 1 || arc_dim < 1 || layers < 1) {
    throw ConfigError("model dimensions must be positive");
  }
  if (window < 0 || distance_buckets < 1) {
    throw ConfigError("window must be >= 0 and distance_buckets >= 1");
  }
  if (!(dropout >= 0.0 && dropout < 1.0) ||
      !(word_dropout >= 0.0 && word_dropout < 1.0)) {
    throw ConfigError("dropout rates must lie in [0, 1)");
  }
  if (epochs < 0 || batch_size < 1 || !(learning_rate > 0.0)) {
    throw ConfigError("epochs >= 0, batch_size >= 1 and learning_rate > 0");
  }
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  if (!(hmm_smoothing > 0.0)) throw ConfigError("hmm_smoothing must be > 0");
}

void Model::Build(Rng *init) {
  const ModelConfig &c = config_;
  const int v = vocab_.size();
  const int t = treebank::NumTags();
  const bool create = init != nullptr;
  if (c.flavor == Flavor::kHmmViterbi) {
    if (create) {
      params_.AddZeros("hmm.emit", t, v);
      params_.AddZeros("hmm.trans", t, t);
      params_.AddZeros("hmm.start", 1, t);
      params_.AddZeros("hmm.end", 1, t);
    }
    return;
  }
  if (create) params_.AddUniform("emb", v, c.embed_dim, 0.1, *init);
  int feature_dim = 0;
  if (IsRecurrent(c.flavor)) {
    encoder_ = create ? nn::BiLstm(params_, "enc", c.embed_dim, c.hidden_dim,
                                   c.layers, *init)
                      : nn::BiLstm::Bind(params_, "enc", c.layers);
    feature_dim = 2 * c.hidden_dim;
  } else {
    const int in = (2 * c.window + 1) * c.embed_dim;
    mlp_ = create ? nn::Linear(params_, "mlp", in, c.hidden_dim, *init)
                  : nn::Linear::Bind(params_, "mlp");
    feature_dim = c.hidden_dim;
  }
  if (KindOf(c.flavor) == ModelKind::kParser) {
    head_proj_ = create ? nn::Linear(params_, "head", feature_dim, c.arc_dim, *init)
                        : nn::Linear::Bind(params_, "head");
    dep_proj_ = create ? nn::Linear(params_, "dep", feature_dim, c.arc_dim, *init)
                       : nn::Linear::Bind(params_, "dep");
    if (create) {
      params_.AddGlorot("biaffine.u", c.arc_dim, c.arc_dim, *init);
      params_.AddZeros("biaffine.h", c.arc_dim, 1);
      if (c.flavor == Flavor::kWindowFeedforwardGreedy) {
        params_.AddZeros("dist", 1, 2 * c.distance_buckets + 1);
      }
    }
  } else {
    out_ = create ? nn::Linear(params_, "out", feature_dim, t, *init)
                  : nn::Linear::Bind(params_, "out");
  }
}

std::vector<int> Model::InputIds(const std::vector<std::string> &tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size() + 1);
  if (kind() == ModelKind::kParser) ids.push_back(treebank::kRootId);
  for (const auto &tok : tokens) ids.push_back(vocab_.Lookup(tok));
  return ids;
}

nn::Parameter &Model::embeddings() const {
  if (!differentiable()) throw ConfigError("HMM taggers have no embeddings");
  return params_.Get("emb");
}

Expr Model::Window(Graph &g, Expr emb) const {
  const int w = config_.window;
  const int m = emb.rows();
  if (w == 0) return emb;
  const std::vector<int> pads(w, treebank::kPadId);
  Expr pad = g.Lookup(params_.Get("emb"), pads);
  Expr padded = nn::ConcatRows({pad, emb, pad});
  std::vector<Expr> parts;
  for (int o = 0; o <= 2 * w; ++o) parts.push_back(nn::SliceRows(padded, o, m));
  return nn::ConcatCols(parts);
}

Expr Model::Scores(Graph &g, Expr emb, Rng *dropout_rng) const {
  if (!differentiable()) throw ConfigError("HMM taggers have no differentiable scores");
  const ModelConfig &c = config_;
  Expr features;
  if (IsRecurrent(c.flavor)) {
    Expr x = emb;
    if (dropout_rng != nullptr) x = nn::Dropout(x, c.dropout, *dropout_rng);
    features = encoder_(g, x, c.dropout, dropout_rng);
  } else {
    features = nn::Tanh(mlp_(g, Window(g, emb)));
    if (dropout_rng != nullptr) features = nn::Dropout(features, c.dropout, *dropout_rng);
  }
  if (kind() == ModelKind::kTagger) return out_(g, features);

  const int n = emb.rows() - 1;
  if (n < 1) throw ShapeError("cannot score an empty sentence");
  Expr head = nn::Tanh(head_proj_(g, features));
  Expr dep = nn::SliceRows(nn::Tanh(dep_proj_(g, features)), 1, n);
  Expr arcs = nn::MatMul(nn::MatMul(dep, g.Param(params_.Get("biaffine.u"))),
                         nn::Transpose(head));
  Expr bias = nn::Transpose(nn::MatMul(head, g.Param(params_.Get("biaffine.h"))));
  arcs = nn::Add(arcs, bias);
  if (c.flavor == Flavor::kWindowFeedforwardGreedy) {
    const int b = c.distance_buckets;
    std::vector<int> bucket(size_t(n) * (n + 1));
    for (int d = 1; d <= n; ++d) {
      for (int h = 0; h <= n; ++h) {
        bucket[size_t(d - 1) * (n + 1) + h] = std::clamp(h - d, -b, b) + b;
      }
    }
    arcs = nn::Add(arcs, nn::Gather(g.Param(params_.Get("dist")), n, n + 1, bucket));
  }
  Tensor mask(n, n + 1);
  for (int d = 1; d <= n; ++d) mask(d - 1, d) = kNegInf;
  return nn::AddConst(arcs, mask);
}

Expr Model::Nll(Graph &g, Expr scores, const std::vector<int> &target) const {
  if (static_cast<int>(target.size()) != scores.rows()) {
    throw ShapeError("target length " + std::to_string(target.size()) +
                     " does not match " + std::to_string(scores.rows()) + " tokens");
  }
  return nn::Scale(nn::Sum(nn::Pick(nn::LogSoftmax(scores), target)), -1.0);
}

std::vector<int> Model::GoldOf(const Sentence &s) const {
  if (kind() == ModelKind::kParser) {
    if (!s.gold_tree) throw ConfigError("sentence " + s.id + " has no gold tree");
    return s.gold_tree->heads;
  }
  if (!s.gold_tags) throw ConfigError("sentence " + s.id + " has no gold tags");
  return s.gold_tags->tags;
}

Expr Model::SentenceNll(Graph &g, const Sentence &s, Rng *dropout_rng) const {
  std::vector<int> ids = InputIds(s.tokens);
  if (dropout_rng != nullptr && config_.word_dropout > 0.0) {
    for (int &id : ids) {
      if (!treebank::Vocabulary::IsReserved(id) &&
          dropout_rng->Bernoulli(config_.word_dropout)) {
        id = treebank::kUnkId;
      }
    }
  }
  Expr emb = g.Lookup(params_.Get("emb"), ids);
  return Nll(g, Scores(g, emb, dropout_rng), GoldOf(s));
}

Model Model::Train(const Corpus &corpus, const ModelConfig &config) {
  config.Validate();
  if (corpus.empty()) throw ConfigError("cannot train on an empty corpus");
  Model m;
  m.config_ = config;
  for (const auto &s : corpus) {
    m.GoldOf(s);
    if (s.tokens.empty()) throw ConfigError("sentence " + s.id + " is empty");
  }
  m.vocab_ = treebank::Vocabulary::Build(corpus, config.min_count);
  Rng init = Rng::Derive(config.seed, "init");
  m.Build(&init);
  if (config.flavor == Flavor::kHmmViterbi) {
    m.TrainHmm(corpus);
  } else {
    m.TrainNeural(corpus);
  }
  m.params_.RoundToFloat();
  return m;
}

Model Model::FineTune(const Corpus &corpus, int epochs, double learning_rate) const {
  if (!differentiable()) throw ConfigError("the HMM flavor cannot be fine-tuned");
  if (corpus.empty()) throw ConfigError("cannot fine-tune on an empty corpus");
  for (const auto &s : corpus) {
    GoldOf(s);
    if (s.tokens.empty()) throw ConfigError("sentence " + s.id + " is empty");
  }
  Model m = FromCheckpoint(ToCheckpoint());
  m.config_.epochs = epochs;
  m.config_.learning_rate = learning_rate;
  m.config_.Validate();
  m.TrainNeural(corpus);
  m.params_.RoundToFloat();
  return m;
}

void Model::TrainNeural(const Corpus &corpus) {
  nn::AdamConfig adam_config;
  adam_config.learning_rate = config_.learning_rate;
  nn::AdamState adam(params_, adam_config);
  Rng shuffle = Rng::Derive(config_.seed, "shuffle");
  Rng dropout = Rng::Derive(config_.seed, "dropout");
  std::vector<size_t> order(corpus.size());
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle.UniformInt(i)]);
    }
    double epoch_loss = 0.0;
    size_t epoch_tokens = 0;
    for (size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
      const size_t end = std::min(order.size(), begin + config_.batch_size);
      Graph g(true);
      std::vector<Expr> losses;
      size_t tokens = 0;
      for (size_t k = begin; k < end; ++k) {
        const Sentence &s = corpus[order[k]];
        losses.push_back(SentenceNll(g, s, &dropout));
        tokens += s.tokens.size();
      }
      Expr total = losses.size() == 1 ? losses[0] : nn::Sum(nn::ConcatRows(losses));
      epoch_loss += total.value().scalar();
      epoch_tokens += tokens;
      g.Backward(nn::Scale(total, 1.0 / static_cast<double>(tokens)));
      adam.Step(params_);
    }
    curve_.push_back(epoch_loss / static_cast<double>(epoch_tokens));
  }
}

void Model::TrainHmm(const Corpus &corpus) {
  const int t = treebank::NumTags();
  const int v = vocab_.size();
  const double k = config_.hmm_smoothing;
  std::vector<double> emit(size_t(t) * v, 0.0), trans(size_t(t) * t, 0.0);
  std::vector<double> start(t, 0.0), end(t, 0.0), tag_count(t, 0.0);
  for (const auto &s : corpus) {
    const std::vector<int> ids = InputIds(s.tokens);
    const std::vector<int> &tags = s.gold_tags->tags;
    for (size_t i = 0; i < tags.size(); ++i) {
      emit[size_t(tags[i]) * v + ids[i]] += 1.0;
      tag_count[tags[i]] += 1.0;
      if (i > 0) trans[size_t(tags[i - 1]) * t + tags[i]] += 1.0;
    }
    start[tags.front()] += 1.0;
    end[tags.back()] += 1.0;
  }
  Tensor &e = params_.Get("hmm.emit").value;
  Tensor &tr = params_.Get("hmm.trans").value;
  Tensor &st = params_.Get("hmm.start").value;
  Tensor &en = params_.Get("hmm.end").value;
  const double sentences = static_cast<double>(corpus.size());
  for (int a = 0; a < t; ++a) {
    for (int w = 0; w < v; ++w) {
      e(a, w) = std::log((emit[size_t(a) * v + w] + k) / (tag_count[a] + k * v));
    }
    // Outgoing events from a: every following tag or the sentence end.
    for (int b = 0; b < t; ++b) {
      tr(a, b) = std::log((trans[size_t(a) * t + b] + k) / (tag_count[a] + k * (t + 1)));
    }
    en(0, a) = std::log((end[a] + k) / (tag_count[a] + k * (t + 1)));
    st(0, a) = std::log((start[a] + k) / (sentences + k * t));
  }
  // Per-token negative log joint likelihood of the training data.
  params_.RoundToFloat();
  double nll = 0.0;
  size_t tokens = 0;
  for (const auto &s : corpus) {
    const Tensor scores = TagScores(s.tokens);
    nll -= PathScore(scores, tr, s.gold_tags->tags);
    tokens += s.tokens.size();
  }
  curve_.push_back(nll / static_cast<double>(tokens));
}

ArcScores Model::ScoreArcs(const std::vector<std::string> &tokens) const {
  if (kind() != ModelKind::kParser) throw ConfigError("model is not a parser");
  if (tokens.empty()) throw ShapeError("cannot score an empty sentence");
  Graph g;
  Expr emb = g.Lookup(params_.Get("emb"), InputIds(tokens));
  return ArcScores::FromDependentRows(Scores(g, emb).value());
}

Tensor Model::TagScores(const std::vector<std::string> &tokens) const {
  if (kind() != ModelKind::kTagger) throw ConfigError("model is not a tagger");
  if (tokens.empty()) throw ShapeError("cannot score an empty sentence");
  const std::vector<int> ids = InputIds(tokens);
  if (config_.flavor == Flavor::kHmmViterbi) {
    const Tensor &e = params_.Get("hmm.emit").value;
    const Tensor &st = params_.Get("hmm.start").value;
    const Tensor &en = params_.Get("hmm.end").value;
    const int n = static_cast<int>(ids.size());
    const int t = e.rows();
    Tensor out(n, t);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < t; ++a) {
        out(i, a) = e(a, ids[i]);
        if (i == 0) out(i, a) += st(0, a);
        if (i == n - 1) out(i, a) += en(0, a);
      }
    }
    return out;
  }
  Graph g;
  Expr emb = g.Lookup(params_.Get("emb"), ids);
  return Scores(g, emb).value();
}

std::vector<int> Model::Predict(const std::vector<std::string> &tokens) const {
  switch (config_.flavor) {
    case Flavor::kRecurrentBiaffineCle:
      return DecodeCle(ScoreArcs(tokens)).heads;
    case Flavor::kRecurrentBiaffineEisner:
      return DecodeEisner(ScoreArcs(tokens)).heads;
    case Flavor::kWindowFeedforwardGreedy:
      return DecodeGreedy(ScoreArcs(tokens)).heads;
    case Flavor::kHmmViterbi:
      return ViterbiDecode(TagScores(tokens), params_.Get("hmm.trans").value).tags;
    default: {
      const Tensor scores = TagScores(tokens);
      std::vector<int> tags(scores.rows());
      for (int i = 0; i < scores.rows(); ++i) tags[i] = ArgMax(scores, i);
      return tags;
    }
  }
}

DepTree Model::PredictTree(const std::vector<std::string> &tokens) const {
  if (kind() != ModelKind::kParser) throw ConfigError("model is not a parser");
  DepTree t;
  t.heads = Predict(tokens);
  return t;
}

TagSeq Model::PredictTags(const std::vector<std::string> &tokens) const {
  if (kind() != ModelKind::kTagger) throw ConfigError("model is not a tagger");
  return TagSeq{Predict(tokens)};
}

nn::Checkpoint Model::ToCheckpoint() const {
  nn::Checkpoint ck;
  ck.kind = std::string(KindName(kind()));
  ck.flavor = std::string(FlavorName(config_.flavor));
  ck.meta["config"] = config_.ToJson();
  ck.meta["vocab"] = vocab_.tokens();
  ck.meta["training_curve"] = curve_;
  nn::AppendParams(params_, ck);
  return ck;
}

Model Model::FromCheckpoint(const nn::Checkpoint &ck) {
  if (ck.kind != "parser" && ck.kind != "tagger") {
    throw ConfigError("expected a parser or tagger checkpoint, got " + ck.kind);
  }
  Model m;
  try {
    m.config_ = ModelConfig::FromJson(ck.meta.at("config"));
    m.vocab_ = treebank::Vocabulary::FromTokens(
        ck.meta.at("vocab").get<std::vector<std::string>>(), m.config_.min_count);
    m.curve_ = ck.meta.value("training_curve", std::vector<double>{});
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("bad model metadata: ") + e.what());
  }
  if (FlavorName(m.config_.flavor) != ck.flavor ||
      KindName(m.kind()) != ck.kind) {
    throw FormatError("checkpoint flavor does not match its config");
  }
  m.params_ = nn::ParamsFromCheckpoint(ck);
  try {
    m.Build(nullptr);
  } catch (const Error &e) {
    throw FormatError(std::string("checkpoint is missing parameters: ") + e.what());
  }
  return m;
}

Model Model::Load(const std::string &path) {
  return FromCheckpoint(nn::LoadCheckpoint(path));
}

void Model::Save(const std::string &path) const {
  nn::SaveCheckpoint(path, ToCheckpoint());
}

double Evaluate(const Model &m, const Corpus &corpus) {
  std::vector<std::vector<int>> predicted, gold;
  for (const auto &s : corpus) {
    predicted.push_back(m.Predict(s.tokens));
    gold.push_back(m.GoldOf(s));
  }
  return CorpusAgreement(predicted, gold);
}

}  // namespace spad::structpred
