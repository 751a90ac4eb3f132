// Acceptance suite. Prints one PASS or FAIL line per criterion and exits
// nonzero when any criterion fails. Arguments select a subset by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.h"
#include "spad/base/rng.h"
#include "spad/cli/app.h"
#include "spad/cli/manifest.h"
#include "spad/cli/run_config.h"
#include "spad/genattack/generator.h"
#include "spad/genattack/reinforce.h"
#include "spad/genattack/reward.h"
#include "spad/harness/defense.h"
#include "spad/harness/metrics.h"
#include "spad/harness/significance.h"
#include "spad/nn/optim.h"
#include "spad/quality/embedder.h"
#include "spad/quality/lm.h"
#include "spad/structpred/decode.h"
#include "spad/structpred/model.h"
#include "spad/treebank/conllu.h"
#include "spad/treebank/synthetic.h"
#include "spad/wordattack/fgsm.h"
#include "toy_task.h"

namespace spad::acceptance {
namespace {

namespace fs = std::filesystem;
using genattack::Generator;
using genattack::ModelTriple;
using harness::AdvRecord;
using harness::RefMode;
using structpred::ArcScores;
using structpred::Flavor;
using structpred::Model;
using structpred::ModelConfig;
using treebank::Corpus;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char *fmt, ...) __attribute__((format(printf, 1, 2)));
std::string Format(const char *fmt, ...) {
  char buf[1024];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

void Log(const std::string &line) { std::cout << "  " << line << std::endl; }

// 1. Decoders against brute-force enumeration.
Outcome DecoderExactness() {
  const int kInstances = 1000;
  int mismatches = 0;
  Rng rng(20261016);
  for (int trial = 0; trial < kInstances; ++trial) {
    const int n = 1 + static_cast<int>(rng.UniformInt(6));
    const bool integer = trial % 2 == 1;
    const ArcScores s = oracle::RandomArcScores(n, rng, integer);
    const auto proj = oracle::BruteForceTree(s, true);
    const auto any = oracle::BruteForceTree(s, false);
    const treebank::DepTree eisner = structpred::DecodeEisner(s);
    const treebank::DepTree cle = structpred::DecodeCle(s);
    if (eisner.heads != proj.heads || !eisner.IsProjective()) ++mismatches;
    if (cle.heads != any.heads || !cle.IsValid()) ++mismatches;
  }
  for (int trial = 0; trial < kInstances; ++trial) {
    const int n = 1 + static_cast<int>(rng.UniformInt(8));
    const int k = 1 + static_cast<int>(rng.UniformInt(4));
    const bool integer = trial % 2 == 1;
    const nn::Tensor e = oracle::RandomMatrix(n, k, rng, integer);
    const nn::Tensor t = oracle::RandomMatrix(k, k, rng, integer);
    if (structpred::ViterbiDecode(e, t).tags != oracle::BruteForcePath(e, t).tags) ++mismatches;
  }
  return {mismatches == 0,
          Format("%d instances each for Eisner, CLE and Viterbi; %d mismatches", kInstances,
                 mismatches)};
}

Corpus SmallCorpus(int n, uint64_t seed, int cap) {
  Corpus c = treebank::GenerateSynthetic(treebank::DefaultGrammarConfig(), n, seed);
  treebank::ApplyLengthCap(c, cap);
  return c;
}

void RandomizeWeights(nn::ParamStore &params, uint64_t seed) {
  Rng rng = Rng::Derive(seed, "fd-weights");
  for (nn::Parameter *p : params.All()) {
    for (double &v : p->value.data()) v = 0.7 * rng.Normal();
  }
}

// 2. Central finite differences, h = 1e-5, on every trainable architecture.
Outcome GradientIntegrity() {
  const double kStep = 1e-5, kTolerance = 1e-4;
  const int kSeeds = 5;
  double worst = 0.0;
  std::string worst_name;
  int checks = 0;
  auto record = [&](double err, const std::string &name) {
    ++checks;
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  };

  const Corpus corpus = SmallCorpus(4, 9, 10);
  const Flavor neural[] = {Flavor::kRecurrentBiaffineCle, Flavor::kRecurrentBiaffineEisner,
                           Flavor::kWindowFeedforwardGreedy, Flavor::kRecurrentSoftmax,
                           Flavor::kWindowFeedforward};
  treebank::Sentence probe;
  probe.tokens.assign(corpus[0].tokens.begin(),
                      corpus[0].tokens.begin() + std::min<size_t>(3, corpus[0].tokens.size()));
  const int n = static_cast<int>(probe.tokens.size());
  treebank::DepTree chain;
  for (int d = 1; d <= n; ++d) chain.heads.push_back(d - 1);
  probe.gold_tree = chain;
  probe.gold_tags = treebank::TagSeq{std::vector<int>(n, 3)};
  for (Flavor f : neural) {
    for (uint64_t seed = 1; seed <= kSeeds; ++seed) {
      ModelConfig c = ModelConfig::Default(f);
      c.embed_dim = c.hidden_dim = c.arc_dim = 3;
      c.layers = 1;
      c.window = 1;
      c.distance_buckets = 2;
      c.epochs = 0;
      c.seed = seed;
      const Model m = Model::Train(corpus, c);
      RandomizeWeights(m.params(), seed);
      record(nn::FiniteDiffCheck(
                 m.params(), [&](nn::Graph &g) { return m.SentenceNll(g, probe); }, kStep),
             std::string(structpred::FlavorName(f)));
    }
  }

  const Corpus lm_corpus = SmallCorpus(20, 9, 15);
  for (uint64_t seed = 1; seed <= kSeeds; ++seed) {
    quality::LmConfig c;
    c.arch = quality::LmArch::kRecurrent;
    c.embed_dim = c.hidden_dim = 3;
    c.epochs = 0;
    c.seed = seed;
    c.heldout_fraction = 0.0;
    const quality::LanguageModel lm = quality::LanguageModel::Train(lm_corpus, c);
    RandomizeWeights(lm.params(), seed);
    const std::vector<std::string> words(lm_corpus[0].tokens.begin(),
                                         lm_corpus[0].tokens.begin() + 2);
    record(nn::FiniteDiffCheck(
               lm.params(), [&](nn::Graph &g) { return lm.SentenceNll(g, words); }, kStep),
           "recurrent LM");
  }

  // Encoder-decoder generator on a three-token source.
  const Corpus gen_corpus = SmallCorpus(60, 6, 4);
  for (uint64_t seed = 1; seed <= kSeeds; ++seed) {
    genattack::GeneratorConfig c;
    c.embed_dim = c.hidden_dim = 3;
    c.layers = 1;
    c.max_length = 12;
    c.seed = seed;
    const Generator gen = Generator::Create(gen_corpus, c);
    RandomizeWeights(gen.params(), seed);
    const std::vector<int> src = gen.Ids(
        {gen_corpus[0].tokens[0], gen_corpus[1].tokens[0], gen_corpus[2].tokens[0]});
    const std::vector<int> out = gen.Ids({gen_corpus[2].tokens[0], gen_corpus[3].tokens[0]});
    record(nn::FiniteDiffCheck(
               gen.params(), [&](nn::Graph &g) { return gen.SequenceLogProb(g, src, out); },
               kStep),
           "seq2seq generator");
  }
  return {worst < kTolerance,
          Format("%d checks (7 architectures x %d seeds), max relative error %.2e (%s)", checks,
                 kSeeds, worst, worst_name.c_str())};
}

// 3. Structure reward.
Outcome StructureRewardCorrectness() {
  using genattack::Predictions;
  using genattack::StructureReward;
  const bool all_agree = StructureReward(Predictions{{2, 0, 2}, {2, 0, 2}, {2, 0, 2}}) == -1.0;
  const bool a_wrong = StructureReward(Predictions{{0, 1, 1}, {2, 0, 2}, {2, 0, 2}}) == 1.0;
  const bool half = StructureReward(Predictions{{2, 0, 1, 1}, {2, 0, 2, 2}, {2, 0, 2, 2}}) == 0.0;
  Rng rng(3);
  int violations = 0;
  const int kTriples = 10000;
  for (int trial = 0; trial < kTriples; ++trial) {
    const int n = 1 + static_cast<int>(rng.UniformInt(10));
    const int k = 1 + static_cast<int>(rng.UniformInt(4));
    Predictions p;
    for (auto *v : {&p.a, &p.b, &p.c}) {
      for (int i = 0; i < n; ++i) v->push_back(static_cast<int>(rng.UniformInt(k)));
    }
    const double s = StructureReward(p);
    if (s < -1.0 || s > 1.0 || s != StructureReward(Predictions{p.a, p.c, p.b})) ++violations;
  }
  return {all_agree && a_wrong && half && violations == 0,
          Format("analytic cases %s/%s/%s; %d of %d random triples violate bounds or swap "
                 "invariance",
                 all_agree ? "ok" : "FAIL", a_wrong ? "ok" : "FAIL", half ? "ok" : "FAIL",
                 violations, kTriples)};
}

// Models and scorers on the default corpus, shared by criteria 4 and 6 to 8.
struct Desk {
  cli::RunConfig config;
  Corpus train, dev, test;
  std::unique_ptr<Model> a, b, c, tagger;
  double parser_seconds = 0.0, tagger_seconds = 0.0;
  std::optional<quality::LanguageModel> lm;
  std::optional<quality::Embedder> embedder;
  std::unique_ptr<Generator> attacker;

  ModelTriple Triple() const { return {a.get(), b.get(), c.get()}; }
};

Desk &GetDesk() {
  static Desk *desk = [] {
    auto *d = new Desk;
    d->config = cli::RunConfig::FromJson(nlohmann::json::object());
    const cli::DataConfig &data = d->config.data;
    const treebank::SynthGrammarConfig grammar = data.Grammar();
    d->train = treebank::GenerateSynthetic(grammar, data.train_size, data.train_seed);
    d->dev = treebank::GenerateSynthetic(grammar, data.dev_size, data.dev_seed);
    d->test = treebank::GenerateSynthetic(grammar, data.test_size, data.test_seed);
    return d;
  }();
  return *desk;
}

void EnsureVictims(Desk &d) {
  if (d.a) return;
  auto start = std::chrono::steady_clock::now();
  d.a = std::make_unique<Model>(Model::Train(d.train, d.config.Model(cli::Role::kA)));
  d.parser_seconds = Seconds(start);
  start = std::chrono::steady_clock::now();
  const cli::RunConfig tagging = cli::RunConfig::FromJson({{"task", "tagging"}});
  d.tagger = std::make_unique<Model>(Model::Train(d.train, tagging.Model(cli::Role::kA)));
  d.tagger_seconds = Seconds(start);
}

void EnsureAttackStack(Desk &d) {
  EnsureVictims(d);
  if (d.attacker) return;
  auto start = std::chrono::steady_clock::now();
  d.b = std::make_unique<Model>(Model::Train(d.train, d.config.Model(cli::Role::kB)));
  d.c = std::make_unique<Model>(Model::Train(d.train, d.config.Model(cli::Role::kC)));
  d.lm = quality::LanguageModel::Train(d.train, d.config.lm);
  d.embedder = quality::Embedder::Train(d.train, d.config.embedder);
  Log(Format("references and scorers trained in %.0f s", Seconds(start)));
  start = std::chrono::steady_clock::now();
  auto gen = std::make_unique<Generator>(Generator::Create(d.train, d.config.generator));
  gen->PretrainDae(d.train, d.config.dae);
  Log(Format("denoising pretraining took %.0f s", Seconds(start)));
  start = std::chrono::steady_clock::now();
  const ModelTriple triple = d.Triple();
  const genattack::Scorers scorers{&*d.lm, &*d.embedder};
  const genattack::RLConfig rl = d.config.rl;
  const genattack::RewardFn reward = [&](const std::vector<std::string> &x,
                                         const std::vector<std::string> &x_hat) {
    return genattack::CompositeReward(x, x_hat, triple, scorers, rl);
  };
  genattack::TrainAttacker(*gen, d.train, reward, rl);
  Log(Format("REINFORCE training took %.0f s", Seconds(start)));
  d.attacker = std::move(gen);
}

// 4. Victim competence on the default corpus.
Outcome Competence() {
  Desk &d = GetDesk();
  EnsureVictims(d);
  const double uas = structpred::Evaluate(*d.a, d.dev);
  const double acc = structpred::Evaluate(*d.tagger, d.dev);
  const double seconds = d.parser_seconds + d.tagger_seconds;
  return {uas >= 0.90 && acc >= 0.95 && seconds < 600.0,
          Format("%zu train / %zu dev: parser UAS %.4f (>= 0.90), tagger accuracy %.4f "
                 "(>= 0.95), training %.0f s (< 600 s)",
                 d.train.size(), d.dev.size(), uas, acc, seconds)};
}

// 5. REINFORCE on the enumerable toy task.
Outcome ReinforceEstimator() {
  const Generator probe = toy::MakeGenerator(1);
  const double cosine =
      toy::CosineSimilarity(toy::ExactGradient(probe), toy::EmpiricalGradient(probe, 50000, 1));

  Generator gen = toy::MakeGenerator(2);
  genattack::RLConfig c;
  c.learning_rate = 1e-2;
  nn::AdamConfig ac;
  ac.learning_rate = c.learning_rate;
  nn::AdamState adam(gen.params(), ac);
  genattack::BaselineState baseline;
  Corpus batch;
  for (int i = 0; i < 16; ++i) {
    treebank::Sentence s;
    s.id = std::to_string(i);
    s.tokens = toy::Source();
    batch.push_back(s);
  }
  // Exact expected reward every 50 steps.
  std::vector<double> trajectory = {toy::ExpectedReward(gen)};
  for (uint64_t step = 0; step < 200; ++step) {
    genattack::ReinforceStep(gen, adam, batch, toy::Reward(), baseline, c, step);
    if ((step + 1) % 50 == 0) trajectory.push_back(toy::ExpectedReward(gen));
  }
  bool increasing = true;
  for (size_t i = 1; i < trajectory.size(); ++i) {
    increasing = increasing && trajectory[i] > trajectory[i - 1];
  }
  std::string path;
  for (double r : trajectory) path += Format("%s%.4f", path.empty() ? "" : " -> ", r);
  return {cosine > 0.95 && increasing,
          Format("cosine %.4f (> 0.95); expected reward at steps 0/50/100/150/200: %s", cosine,
                 path.c_str())};
}

double MeanPerplexity(const std::vector<AdvRecord> &records, const quality::LanguageModel &lm) {
  double sum = 0.0;
  for (const AdvRecord &r : records) sum += lm.Perplexity(r.generated);
  return sum / static_cast<double>(records.size());
}

std::vector<AdvRecord> Seq2SeqRecords(const Desk &d, const Corpus &input, int *skipped) {
  std::vector<AdvRecord> records;
  *skipped = 0;
  for (const auto &s : input) {
    std::vector<std::string> out = d.attacker->Generate(s.tokens);
    if (out.empty()) {
      ++*skipped;
      continue;
    }
    AdvRecord r;
    r.id = s.id;
    r.original = s.tokens;
    r.generated = std::move(out);
    records.push_back(std::move(r));
  }
  harness::FillPredictions(records, d.Triple());
  return records;
}

std::string CountsText(const harness::AttackCounts &c) {
  return Format("%ld/%ld tokens over %ld consensus sentences", c.tokens_wrong, c.tokens_counted,
                c.sentences_counted);
}

// 6. Ordering of attack rates and fluency.
Outcome AttackEffectiveness() {
  Desk &d = GetDesk();
  EnsureAttackStack(d);
  const ModelTriple triple = d.Triple();
  const std::vector<AdvRecord> origin = harness::OriginRecords(d.dev, triple);
  wordattack::PerturbationConfig pc = d.config.perturbation;
  pc.epsilon = 2.5;
  std::vector<AdvRecord> fgsm;
  for (const auto &s : d.dev) fgsm.push_back(wordattack::AttackSentence(*d.a, s, pc).record);
  harness::FillPredictions(fgsm, triple);
  int skipped = 0;
  const std::vector<AdvRecord> seq = Seq2SeqRecords(d, d.dev, &skipped);

  const harness::AttackCounts co = harness::CountAttacks(origin, RefMode::kBAndC);
  const harness::AttackCounts cf = harness::CountAttacks(fgsm, RefMode::kBAndC);
  const harness::AttackCounts cs = harness::CountAttacks(seq, RefMode::kBAndC);
  const double r_origin = co.TokenRate(), r_fgsm = cf.TokenRate(), r_seq = cs.TokenRate();
  const double ppl_fgsm = MeanPerplexity(fgsm, *d.lm);
  const double ppl_seq = MeanPerplexity(seq, *d.lm);
  Log(Format("origin  %.3f%% (%s)", r_origin, CountsText(co).c_str()));
  Log(Format("FGSM    %.3f%% (%s), eps %.1f, perplexity %.2f", r_fgsm, CountsText(cf).c_str(),
             pc.epsilon, ppl_fgsm));
  Log(Format("seq2seq %.3f%% (%s), %d empty outputs skipped, perplexity %.2f", r_seq,
             CountsText(cs).c_str(), skipped, ppl_seq));
  const bool enough = d.dev.size() >= 200;
  const bool pass = enough && r_seq >= 2.0 * r_origin && r_fgsm > r_origin &&
                    ppl_seq <= 1.5 * ppl_fgsm;
  return {pass, Format("%zu dev sentences attacked; seq2seq %.3f%% >= 2 x origin %.3f%%, "
                       "FGSM %.3f%% > origin, seq2seq perplexity %.2f <= 1.5 x FGSM %.2f",
                       d.dev.size(), r_seq, r_origin, r_fgsm, ppl_seq, ppl_fgsm)};
}

// Per-token correctness of the victim on consensus sentences.
std::vector<double> Correctness(const std::vector<AdvRecord> &records) {
  std::vector<double> out;
  for (const AdvRecord &r : records) {
    if (!r.Consensus()) continue;
    for (bool wrong : r.Wrong(RefMode::kBAndC)) out.push_back(wrong ? 0.0 : 1.0);
  }
  return out;
}

// 7. Adversarial retraining.
Outcome DefenseEffectiveness() {
  Desk &d = GetDesk();
  EnsureAttackStack(d);
  int skipped = 0;
  const std::vector<AdvRecord> candidates = Seq2SeqRecords(d, d.train, &skipped);
  const harness::FilterResult filtered =
      harness::ConsensusFilter(candidates, d.config.consensus_cap);
  Log(Format("%zu of %zu attacked training sentences pass the consensus filter",
             filtered.corpus.size(), candidates.size()));
  if (filtered.corpus.empty()) return {false, "no adversarial examples survived the filter"};
  const auto start = std::chrono::steady_clock::now();
  const Model retrained =
      harness::AdversarialRetrain(*d.a, d.train, filtered.corpus, d.config.retrain);
  Log(Format("retraining took %.0f s", Seconds(start)));

  const double uas_before = structpred::Evaluate(*d.a, d.dev);
  const double uas_after = structpred::Evaluate(retrained, d.dev);
  const std::vector<AdvRecord> before = Seq2SeqRecords(d, d.test, &skipped);
  std::vector<AdvRecord> after = before;
  for (AdvRecord &r : after) {
    r.pred_a = retrained.Predict(r.generated);
    r.victim_original = retrained.Predict(r.original);
  }
  const harness::AttackCounts cb = harness::CountAttacks(before, RefMode::kBAndC);
  const harness::AttackCounts ca = harness::CountAttacks(after, RefMode::kBAndC);
  const double rate_before = cb.TokenRate(), rate_after = ca.TokenRate();
  const cli::SignificanceConfig &sc = d.config.significance;
  const harness::SignificanceResult sig = harness::SignBootstrap(
      Correctness(before), Correctness(after), sc.resamples, sc.seed);
  const harness::SignificanceResult again = harness::SignBootstrap(
      Correctness(before), Correctness(after), sc.resamples, sc.seed);
  Log(Format("held-out: before %s, after %s", CountsText(cb).c_str(), CountsText(ca).c_str()));
  const bool uas_ok = std::abs(uas_after - uas_before) * 100.0 <= 1.0;
  const bool rate_ok = rate_after <= rate_before;
  const bool reproducible = sig == again;
  return {uas_ok && rate_ok && reproducible,
          Format("clean dev UAS %.2f -> %.2f (within 1.0 point); held-out token attack rate "
                 "%.3f%% -> %.3f%% (no increase); sign bootstrap p = %.4f, statistic %.4f, "
                 "seed %llu, %s",
                 100.0 * uas_before, 100.0 * uas_after, rate_before, rate_after, sig.p_value,
                 sig.statistic, static_cast<unsigned long long>(sc.seed),
                 reproducible ? "identical on re-run" : "NOT reproducible")};
}

// 8. A = B = C gives a constant structure reward.
Outcome AllSameInvariant() {
  Desk &d = GetDesk();
  EnsureAttackStack(d);
  const std::string bytes = nn::SerializeCheckpoint(d.a->ToCheckpoint());
  const Model a = Model::FromCheckpoint(nn::ParseCheckpoint(bytes));
  const Model b = Model::FromCheckpoint(nn::ParseCheckpoint(bytes));
  const Model c = Model::FromCheckpoint(nn::ParseCheckpoint(bytes));
  const ModelTriple same{&a, &b, &c};
  const genattack::Scorers scorers{&*d.lm, &*d.embedder};
  int checked = 0, violations = 0;
  for (const Corpus *pool : {&d.dev, &d.test}) {
    for (const auto &s : *pool) {
      if (checked == 100) break;
      const std::vector<std::string> out = d.attacker->Generate(s.tokens);
      if (out.empty()) continue;
      const harness::RewardBreakdown r =
          genattack::CompositeReward(s.tokens, out, same, scorers, d.config.rl);
      if (r.s_p != -1.0) ++violations;
      ++checked;
    }
  }
  return {checked == 100 && violations == 0,
          Format("%d generated sentences scored with one checkpoint as A, B and C; %d with "
                 "s_p != -1",
                 checked, violations)};
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun Cli(const std::vector<std::string> &args) {
  std::ostringstream out, err;
  const int code = cli::Run(args, out, err);
  return {code, out.str(), err.str()};
}

// 9. Smoke pipeline through the command line, then replay from manifests.
Outcome Reproducibility() {
  const auto start = std::chrono::steady_clock::now();
  const fs::path root =
      fs::temp_directory_path() / ("spad_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  auto at = [&](const std::string &name) { return (root / name).string(); };
  {
    std::ofstream cfg(at("config.json"));
    cfg << nlohmann::json{{"data", {{"train_size", 500}, {"dev_size", 100}, {"test_size", 100}}}}
               .dump(2);
  }
  const std::string cfg = at("config.json");
  const std::vector<std::string> triple = {"--a", at("a.ck"), "--b", at("b.ck"),
                                           "--c", at("c.ck")};
  auto with_triple = [&](std::vector<std::string> args) {
    args.insert(args.end(), triple.begin(), triple.end());
    return args;
  };
  const std::vector<std::vector<std::string>> steps = {
      {"gen-data", "--config", cfg, "--out-dir", at("data")},
      {"train-model", "--config", cfg, "--role", "a", "--train", at("data/train.conllu"),
       "--dev", at("data/dev.conllu"), "--out", at("a.ck")},
      {"train-model", "--config", cfg, "--role", "b", "--train", at("data/train.conllu"),
       "--out", at("b.ck")},
      {"train-model", "--config", cfg, "--role", "c", "--train", at("data/train.conllu"),
       "--out", at("c.ck")},
      {"train-lm", "--config", cfg, "--train", at("data/train.conllu"), "--out", at("lm.ck"),
       "--embedder-out", at("emb.ck")},
      {"pretrain-gen", "--config", cfg, "--train", at("data/train.conllu"), "--out",
       at("gen0.ck")},
      with_triple({"train-attacker", "--config", cfg, "--gen", at("gen0.ck"), "--train",
                   at("data/train.conllu"), "--lm", at("lm.ck"), "--embedder", at("emb.ck"),
                   "--out", at("gen.ck"), "--metrics", at("rl.jsonl")}),
      with_triple({"attack", "seq2seq", "--config", cfg, "--input", at("data/train.conllu"),
                   "--gen", at("gen.ck"), "--out", at("adv_train.jsonl")}),
      with_triple({"attack", "seq2seq", "--config", cfg, "--input", at("data/test.conllu"),
                   "--gen", at("gen.ck"), "--lm", at("lm.ck"), "--embedder", at("emb.ck"),
                   "--out", at("adv_test.jsonl")}),
      {"evaluate", "--config", cfg, "--records", at("adv_test.jsonl"), "--lm", at("lm.ck"),
       "--embedder", at("emb.ck"), "--out", at("before.report.json")},
      {"adv-train", "--config", cfg, "--victim", at("a.ck"), "--train",
       at("data/train.conllu"), "--records", at("adv_train.jsonl"), "--dev",
       at("data/dev.conllu"), "--out", at("a_adv.ck"), "--pseudo-out", at("pseudo.conllu")},
      {"evaluate", "--config", cfg, "--records", at("adv_test.jsonl"), "--victim",
       at("a_adv.ck"), "--out", at("after.report.json"), "--records-out",
       at("adv_test_after.jsonl")},
      {"significance", "--config", cfg, "--before", at("adv_test.jsonl"), "--after",
       at("adv_test_after.jsonl"), "--mode", "bc", "--out", at("significance.json")},
  };
  for (const auto &step : steps) {
    const auto t = std::chrono::steady_clock::now();
    const CliRun r = Cli(step);
    if (r.code != 0) {
      return {false, "spad " + step[0] + " exited " + std::to_string(r.code) + ": " + r.err};
    }
    Log(Format("spad %-14s %5.0f s  %s", step[0].c_str(), Seconds(t),
               r.out.substr(0, r.out.find('\n')).c_str()));
  }
  const double pipeline_seconds = Seconds(start);

  // One replay per distinct manifest; a run writes the same manifest beside
  // each of its outputs.
  std::set<std::string> seen;
  std::vector<std::string> manifests;
  for (const auto &entry : fs::recursive_directory_iterator(root)) {
    const std::string p = entry.path().string();
    if (p.size() > 14 && p.compare(p.size() - 14, 14, ".manifest.json") == 0) {
      manifests.push_back(p);
    }
  }
  std::sort(manifests.begin(), manifests.end());
  int replays = 0, identical = 0, artifacts = 0;
  std::string failures;
  for (const std::string &m : manifests) {
    std::ifstream in(m);
    std::stringstream text;
    text << in.rdbuf();
    if (!seen.insert(text.str()).second) continue;
    ++replays;
    const CliRun r = Cli({"replay", "--manifest", m, "--out-dir",
                          at("replay/" + std::to_string(replays))});
    artifacts += static_cast<int>(cli::ReadManifest(m).outputs.size());
    if (r.code == 0) {
      ++identical;
    } else {
      failures += " " + fs::path(m).filename().string() + ": " + r.out + r.err;
    }
  }
  const double total = Seconds(start);
  const bool pass = replays == static_cast<int>(steps.size()) && identical == replays &&
                    total < 1800.0;
  if (pass) fs::remove_all(root);
  return {pass, Format("%zu-step pipeline on 500 training sentences in %.0f s; %d/%d replays "
                       "byte-identical over %d artifacts; total %.0f s (< 1800 s)%s",
                       steps.size(), pipeline_seconds, identical, replays, artifacts, total,
                       failures.c_str())};
}

struct Criterion {
  int number;
  const char *title;
  double limit_seconds;  // 0 when no runtime bound applies
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace spad::acceptance

int main(int argc, char **argv) {
  using namespace spad::acceptance;
  const std::vector<Criterion> criteria = {
      {1, "Decoder exactness", 60, DecoderExactness},
      {2, "Gradient integrity", 120, GradientIntegrity},
      {3, "Structure reward correctness", 0, StructureRewardCorrectness},
      {4, "Structured-prediction competence", 0, Competence},
      {5, "REINFORCE estimator", 180, ReinforceEstimator},
      {6, "Attack effectiveness", 0, AttackEffectiveness},
      {7, "Defense effectiveness", 0, DefenseEffectiveness},
      {8, "AllSame ablation invariant", 0, AllSameInvariant},
      {9, "Reproducibility", 0, Reproducibility},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  std::vector<std::string> summary;
  for (const Criterion &c : criteria) {
    if (!selected.empty() && !selected.count(c.number)) continue;
    std::cout << "[" << c.number << "] " << c.title << std::endl;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = Seconds(start);
    if (c.limit_seconds > 0 && seconds >= c.limit_seconds) {
      o.pass = false;
      o.detail += Format("; took %.0f s, limit %.0f s", seconds, c.limit_seconds);
    }
    failed += o.pass ? 0 : 1;
    const std::string line = Format("%s [%d] %s: %s (%.1f s)", o.pass ? "PASS" : "FAIL",
                                    c.number, c.title, o.detail.c_str(), seconds);
    std::cout << line << std::endl;
    summary.push_back(line);
  }
  std::cout << "\nSummary\n";
  for (const auto &line : summary) std::cout << line << "\n";
  std::cout << (failed == 0 ? "ALL CRITERIA PASS" : Format("%d CRITERIA FAIL", failed))
            << std::endl;
  return failed == 0 ? 0 : 1;
}
