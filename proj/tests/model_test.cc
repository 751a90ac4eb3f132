#include <cmath>

#include <gtest/gtest.h>

#include "spad/base/error.h"
#include "spad/nn/optim.h"
#include "spad/structpred/agreement.h"
#include "spad/structpred/model.h"
#include "spad/treebank/conllu.h"
#include "spad/treebank/synthetic.h"

namespace spad::structpred {
namespace {

using treebank::Corpus;

const Flavor kNeural[] = {Flavor::kRecurrentBiaffineCle,
                          Flavor::kRecurrentBiaffineEisner,
                          Flavor::kWindowFeedforwardGreedy,
                          Flavor::kRecurrentSoftmax, Flavor::kWindowFeedforward};

const Flavor kAll[] = {Flavor::kRecurrentBiaffineCle,
                       Flavor::kRecurrentBiaffineEisner,
                       Flavor::kWindowFeedforwardGreedy,
                       Flavor::kRecurrentSoftmax,
                       Flavor::kWindowFeedforward,
                       Flavor::kHmmViterbi};

ModelConfig Tiny(Flavor f, int epochs, uint64_t seed = 1) {
  ModelConfig c = ModelConfig::Default(f);
  c.embed_dim = 3;
  c.hidden_dim = 3;
  c.arc_dim = 3;
  c.layers = 1;
  c.window = 1;
  c.distance_buckets = 2;
  c.epochs = epochs;
  c.seed = seed;
  return c;
}

Corpus SmallCorpus(int n, uint64_t seed) {
  Corpus c = treebank::GenerateSynthetic(treebank::DefaultGrammarConfig(), n, seed);
  treebank::ApplyLengthCap(c, 10);
  return c;
}

TEST(ModelConfigTest, JsonRoundTrip) {
  for (Flavor f : kAll) {
    const ModelConfig c = ModelConfig::Default(f);
    EXPECT_EQ(ModelConfig::FromJson(c.ToJson()).ToJson(), c.ToJson());
    EXPECT_EQ(FlavorFromName(FlavorName(f)), f);
  }
}

TEST(ModelConfigTest, RejectsUnknownKeysAndBadValues) {
  nlohmann::json j = ModelConfig::Default(Flavor::kRecurrentSoftmax).ToJson();
  j["typo"] = 1;
  EXPECT_THROW(ModelConfig::FromJson(j), ConfigError);
  EXPECT_THROW(FlavorFromName("TRANSFORMER"), ConfigError);
  ModelConfig c;
  c.dropout = 1.0;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(ModelTest, FlavorDiversityInDefaults) {
  const auto a = ModelConfig::Default(Flavor::kRecurrentBiaffineCle);
  const auto b = ModelConfig::Default(Flavor::kRecurrentBiaffineEisner);
  EXPECT_NE(a.ToJson(), b.ToJson());
  EXPECT_NE(a.seed, b.seed);
}

TEST(ModelTest, EmptyCorpusAndKindMismatch) {
  EXPECT_THROW(Model::Train({}, Tiny(Flavor::kRecurrentSoftmax, 1)), ConfigError);
  Corpus c = SmallCorpus(3, 1);
  c[0].gold_tags.reset();
  EXPECT_THROW(Model::Train(c, Tiny(Flavor::kRecurrentSoftmax, 1)), ConfigError);
  Model p = Model::Train(SmallCorpus(3, 1), Tiny(Flavor::kRecurrentBiaffineCle, 0));
  EXPECT_THROW(p.PredictTags({"x"}), ConfigError);
  EXPECT_THROW(p.TagScores({"x"}), ConfigError);
}

// Finite differences on every parameter of each trainable architecture.
TEST(ModelTest, GradientsMatchFiniteDifferences) {
  const Corpus corpus = SmallCorpus(4, 9);
  treebank::Sentence s = corpus[0];
  s.tokens.resize(std::min<size_t>(s.tokens.size(), 3));
  for (Flavor f : kNeural) {
    for (uint64_t seed = 1; seed <= 5; ++seed) {
      Model m = Model::Train(corpus, Tiny(f, 0, seed));
      // Unit-scale random weights keep every gradient coordinate well above
      // the finite-difference noise floor.
      Rng rng = Rng::Derive(seed, "fd-weights");
      for (nn::Parameter *p : m.params().All()) {
        for (double &v : p->value.data()) v = 0.7 * rng.Normal();
      }
      // A short sentence with a valid structure of its length.
      treebank::Sentence probe;
      probe.tokens = s.tokens;
      const int n = static_cast<int>(probe.tokens.size());
      treebank::DepTree chain;
      for (int d = 1; d <= n; ++d) chain.heads.push_back(d - 1);
      probe.gold_tree = chain;
      probe.gold_tags = treebank::TagSeq{std::vector<int>(n, 3)};
      const double err = nn::FiniteDiffCheck(
          m.params(), [&](nn::Graph &g) { return m.SentenceNll(g, probe); }, 1e-5);
      EXPECT_LT(err, 1e-4) << FlavorName(f) << " seed " << seed;
    }
  }
}

TEST(ModelTest, TrainingReducesLoss) {
  const Corpus corpus = SmallCorpus(50, 3);
  for (Flavor f : kNeural) {
    ModelConfig c = Tiny(f, 30);
    c.embed_dim = 16;
    c.hidden_dim = 16;
    c.arc_dim = 16;
    c.dropout = 0.0;
    c.word_dropout = 0.0;
    c.learning_rate = 1e-2;
    const Model m = Model::Train(corpus, c);
    ASSERT_EQ(m.training_curve().size(), 30u);
    EXPECT_LT(m.training_curve().back(), m.training_curve().front()) << FlavorName(f);
    EXPECT_GE(Evaluate(m, corpus), 0.9) << FlavorName(f);
  }
}

TEST(ModelTest, ScoreArcsShapeAndDeterminism) {
  const Model m =
      Model::Train(SmallCorpus(10, 2), Tiny(Flavor::kRecurrentBiaffineCle, 1));
  const std::vector<std::string> x = {"a", "b", "c"};
  const ArcScores s = m.ScoreArcs(x);
  EXPECT_EQ(s.size(), 3);
  EXPECT_NO_THROW(s.Validate());
  const ArcScores again = m.ScoreArcs(x);
  for (int h = 0; h <= 3; ++h) {
    for (int d = 1; d <= 3; ++d) {
      if (h == d) {
        EXPECT_EQ(s(h, d), kNegInf);
      } else {
        EXPECT_EQ(s(h, d), again(h, d));
      }
    }
  }
}

TEST(ModelTest, SingleTokenPredictions) {
  const Corpus corpus = SmallCorpus(10, 4);
  for (Flavor f : kAll) {
    const Model m = Model::Train(corpus, Tiny(f, 1));
    const auto y = m.Predict({corpus[0].tokens[0]});
    ASSERT_EQ(y.size(), 1u);
    if (m.kind() == ModelKind::kParser) {
      EXPECT_EQ(y[0], 0);
    } else {
      EXPECT_GE(y[0], 0);
      EXPECT_LT(y[0], treebank::NumTags());
    }
  }
}

TEST(ModelTest, CheckpointRoundTripIsBitExact) {
  const Corpus corpus = SmallCorpus(20, 5);
  for (Flavor f : kAll) {
    const Model m = Model::Train(corpus, Tiny(f, 2));
    const std::string bytes = nn::SerializeCheckpoint(m.ToCheckpoint());
    const Model back = Model::FromCheckpoint(nn::ParseCheckpoint(bytes));
    EXPECT_EQ(nn::SerializeCheckpoint(back.ToCheckpoint()), bytes);
    for (const auto &s : corpus) {
      EXPECT_EQ(back.Predict(s.tokens), m.Predict(s.tokens)) << FlavorName(f);
      if (m.kind() == ModelKind::kTagger) {
        const nn::Tensor a = m.TagScores(s.tokens), b = back.TagScores(s.tokens);
        for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
      }
    }
  }
}

TEST(ModelTest, IdenticalTrainingGivesIdenticalBytes) {
  const Corpus corpus = SmallCorpus(20, 6);
  const auto c = Tiny(Flavor::kWindowFeedforwardGreedy, 2);
  EXPECT_EQ(nn::SerializeCheckpoint(Model::Train(corpus, c).ToCheckpoint()),
            nn::SerializeCheckpoint(Model::Train(corpus, c).ToCheckpoint()));
}

TEST(ModelTest, UnknownVersionRejected) {
  const Model m = Model::Train(SmallCorpus(5, 7), Tiny(Flavor::kHmmViterbi, 1));
  const std::string good = nn::SerializeCheckpoint(m.ToCheckpoint());
  std::string bad = good;
  bad[5] = 9;
  EXPECT_THROW(nn::ParseCheckpoint(bad), FormatError);
  EXPECT_THROW(nn::ParseCheckpoint("SPAD0"), FormatError);
  EXPECT_THROW(nn::ParseCheckpoint(good.substr(0, good.size() - 1)), FormatError);
}

TEST(ModelTest, UnknownWordsMapToUnk) {
  const Model m = Model::Train(SmallCorpus(10, 8), Tiny(Flavor::kRecurrentSoftmax, 1));
  EXPECT_EQ(m.InputIds({"never-seen"}), std::vector<int>{treebank::kUnkId});
  EXPECT_NO_THROW(m.Predict({"never-seen", "zzz"}));
}

// Closed-form HMM estimates on a hand-made corpus.
TEST(HmmTest, SmoothedCounts) {
  treebank::Sentence s;
  s.tokens = {"a", "b"};
  const int noun = treebank::TagId("NOUN"), verb = treebank::TagId("VERB");
  s.gold_tags = treebank::TagSeq{{noun, verb}};
  s.gold_tree = treebank::DepTree{{2, 0}, {}};
  ModelConfig c = ModelConfig::Default(Flavor::kHmmViterbi);
  c.hmm_smoothing = 0.5;
  const Model m = Model::Train({s, s}, c);
  const int v = m.vocab().size();  // reserved + a + b
  const int t = treebank::NumTags();
  const nn::Tensor &emit = m.params().Get("hmm.emit").value;
  const nn::Tensor &trans = m.params().Get("hmm.trans").value;
  const int a = m.vocab().Lookup("a");
  EXPECT_FLOAT_EQ(emit(noun, a), std::log((2 + 0.5) / (2 + 0.5 * v)));
  EXPECT_FLOAT_EQ(emit(verb, a), std::log(0.5 / (2 + 0.5 * v)));
  EXPECT_FLOAT_EQ(trans(noun, verb), std::log((2 + 0.5) / (2 + 0.5 * (t + 1))));
  EXPECT_EQ(m.PredictTags({"a", "b"}).tags, (std::vector<int>{noun, verb}));
  // Emission rows are distributions over the vocabulary.
  double total = 0.0;
  for (int w = 0; w < v; ++w) total += std::exp(emit(noun, w));
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(EvaluateTest, EqualsTokenWeightedAgreement) {
  const Corpus corpus = SmallCorpus(15, 10);
  const Model m = Model::Train(corpus, Tiny(Flavor::kRecurrentBiaffineEisner, 1));
  double same = 0, total = 0;
  for (const auto &s : corpus) {
    const auto y = m.Predict(s.tokens);
    same += Agreement(y, s.gold_tree->heads) * y.size();
    total += y.size();
  }
  EXPECT_NEAR(Evaluate(m, corpus), same / total, 1e-12);
}

}  // namespace
}  // namespace spad::structpred
