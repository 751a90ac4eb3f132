#include "spad/cli/app.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "spad/base/error.h"
#include "spad/base/parallel.h"
#include "spad/cli/manifest.h"
#include "spad/cli/run_config.h"
#include "spad/genattack/generator.h"
#include "spad/genattack/reinforce.h"
#include "spad/genattack/reward.h"
#include "spad/harness/defense.h"
#include "spad/harness/metrics.h"
#include "spad/harness/record.h"
#include "spad/harness/report.h"
#include "spad/harness/significance.h"
#include "spad/quality/embedder.h"
#include "spad/quality/lm.h"
#include "spad/structpred/model.h"
#include "spad/treebank/conllu.h"
#include "spad/treebank/synthetic.h"
#include "spad/wordattack/fgsm.h"

namespace spad::cli {
namespace {

namespace fs = std::filesystem;
using harness::AdvRecord;
using structpred::Model;
using treebank::Corpus;

// Options that name files a subcommand writes. Replays redirect them.
const std::map<std::string, std::vector<std::string>> &OutputFlags() {
  static const auto *flags = new std::map<std::string, std::vector<std::string>>{
      {"gen-data", {"--out-dir"}},
      {"train-model", {"--out"}},
      {"train-lm", {"--out", "--embedder-out"}},
      {"pretrain-gen", {"--out"}},
      {"train-attacker", {"--out", "--metrics"}},
      {"attack", {"--out"}},
      {"evaluate", {"--out", "--records-out"}},
      {"adv-train", {"--out", "--pseudo-out"}},
      {"significance", {"--out"}},
  };
  return *flags;
}

struct Options {
  std::string config;
  int jobs = 1;
  std::string out, out_dir, embedder_out, metrics, records_out, pseudo_out;
  std::string train, dev, input, records, before, after, manifest;
  std::string role, gen, a, b, c, lm, embedder, victim;
  std::string method = "fgsm";
  std::string mode = "bc";
  std::string test_method, unit;
  int cap = -2;  // unset
  int resamples = 0;
  std::optional<uint64_t> seed;
  bool fine_tune = false;
};

// Shared state of one subcommand run.
struct Context {
  std::string name;
  std::vector<std::string> args;
  Options opt;
  RunConfig config;
  Manifest manifest;
  std::ostream *out = nullptr;
};

void RequireInput(const std::string &flag, const std::string &path) {
  if (path.empty()) throw ConfigError(flag + " is required");
  if (!fs::is_regular_file(path)) throw ConfigError("input file not found: " + path);
}

void PrepareOutput(const std::string &path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

nlohmann::json SeedsOf(const RunConfig &c) {
  return {{"data", {{"train", c.data.train_seed}, {"dev", c.data.dev_seed},
                    {"test", c.data.test_seed}}},
          {"models", {{"a", c.models[0].seed}, {"b", c.models[1].seed}, {"c", c.models[2].seed}}},
          {"lm", c.lm.seed},
          {"generator", c.generator.seed},
          {"dae", c.dae.seed},
          {"rl", c.rl.seed},
          {"significance", c.significance.seed}};
}

Model LoadModel(Context &ctx, const std::string &flag, const std::string &path) {
  RequireInput(flag, path);
  ctx.manifest.AddInput(flag, path);
  return Model::Load(path);
}

Corpus LoadCorpus(Context &ctx, const std::string &flag, const std::string &path) {
  RequireInput(flag, path);
  ctx.manifest.AddInput(flag, path);
  return treebank::ReadConlluFile(path);
}

std::vector<AdvRecord> LoadRecords(Context &ctx, const std::string &flag,
                                   const std::string &path) {
  RequireInput(flag, path);
  ctx.manifest.AddInput(flag, path);
  return harness::ReadRecords(path);
}

struct Triple {
  Model a, b, c;
  genattack::ModelTriple View() const { return {&a, &b, &c}; }
};

Triple LoadTriple(Context &ctx) {
  Triple t{LoadModel(ctx, "--a", ctx.opt.a), LoadModel(ctx, "--b", ctx.opt.b),
           LoadModel(ctx, "--c", ctx.opt.c)};
  t.View().Validate();
  return t;
}

void Finish(Context &ctx) { WriteManifests(ctx.manifest); }

void GenData(Context &ctx) {
  if (ctx.opt.out_dir.empty()) throw ConfigError("--out-dir is required");
  fs::create_directories(ctx.opt.out_dir);
  const DataConfig &d = ctx.config.data;
  const treebank::SynthGrammarConfig grammar = d.Grammar();
  const std::pair<std::string, Corpus> splits[] = {
      {"train", treebank::GenerateSynthetic(grammar, d.train_size, d.train_seed)},
      {"dev", treebank::GenerateSynthetic(grammar, d.dev_size, d.dev_seed)},
      {"test", treebank::GenerateSynthetic(grammar, d.test_size, d.test_seed)}};
  for (const auto &[name, corpus] : splits) {
    const std::string path = (fs::path(ctx.opt.out_dir) / (name + ".conllu")).string();
    treebank::WriteConlluFile(path, corpus);
    ctx.manifest.AddOutput("--out-dir", path);
    *ctx.out << name << ": " << corpus.size() << " sentences -> " << path << "\n";
  }
  Finish(ctx);
}

void TrainModel(Context &ctx) {
  const Role role = RoleFromName(ctx.opt.role);
  const Corpus train = LoadCorpus(ctx, "--train", ctx.opt.train);
  if (ctx.opt.out.empty()) throw ConfigError("--out is required");
  std::optional<Corpus> dev;
  if (!ctx.opt.dev.empty()) dev = LoadCorpus(ctx, "--dev", ctx.opt.dev);
  const Model m = Model::Train(train, ctx.config.Model(role));
  PrepareOutput(ctx.opt.out);
  m.Save(ctx.opt.out);
  ctx.manifest.AddOutput("--out", ctx.opt.out);
  ctx.manifest.metrics["training_curve"] = m.training_curve();
  *ctx.out << "model " << RoleName(role) << " (" << structpred::FlavorName(m.flavor())
           << ") -> " << ctx.opt.out << "\n";
  if (dev) {
    const double score = structpred::Evaluate(m, *dev);
    ctx.manifest.metrics["dev_score"] = score;
    *ctx.out << "dev " << (m.kind() == structpred::ModelKind::kParser ? "UAS" : "accuracy")
             << " " << score << "\n";
  }
  Finish(ctx);
}

void TrainLm(Context &ctx) {
  const Corpus train = LoadCorpus(ctx, "--train", ctx.opt.train);
  if (ctx.opt.out.empty() || ctx.opt.embedder_out.empty()) {
    throw ConfigError("--out and --embedder-out are required");
  }
  const quality::LanguageModel lm = quality::LanguageModel::Train(train, ctx.config.lm);
  const quality::Embedder emb = quality::Embedder::Train(train, ctx.config.embedder);
  PrepareOutput(ctx.opt.out);
  PrepareOutput(ctx.opt.embedder_out);
  lm.Save(ctx.opt.out);
  emb.Save(ctx.opt.embedder_out);
  ctx.manifest.AddOutput("--out", ctx.opt.out);
  ctx.manifest.AddOutput("--embedder-out", ctx.opt.embedder_out);
  ctx.manifest.metrics["heldout_perplexity"] = lm.heldout_perplexity();
  *ctx.out << "language model held-out perplexity " << lm.heldout_perplexity() << "\n";
  Finish(ctx);
}

void PretrainGen(Context &ctx) {
  const Corpus train = LoadCorpus(ctx, "--train", ctx.opt.train);
  if (ctx.opt.out.empty()) throw ConfigError("--out is required");
  genattack::Generator gen = genattack::Generator::Create(train, ctx.config.generator);
  const std::vector<double> curve = gen.PretrainDae(train, ctx.config.dae);
  PrepareOutput(ctx.opt.out);
  gen.Save(ctx.opt.out);
  ctx.manifest.AddOutput("--out", ctx.opt.out);
  ctx.manifest.metrics["pretrain_curve"] = curve;
  *ctx.out << "denoising pretraining, final per-token loss "
           << (curve.empty() ? 0.0 : curve.back()) << "\n";
  Finish(ctx);
}

struct Scorers {
  std::optional<quality::LanguageModel> lm;
  std::optional<quality::Embedder> embedder;
  genattack::Scorers View() const {
    return {lm ? &*lm : nullptr, embedder ? &*embedder : nullptr};
  }
};

Scorers LoadScorers(Context &ctx, bool required) {
  Scorers s;
  if (required || !ctx.opt.lm.empty()) {
    RequireInput("--lm", ctx.opt.lm);
    ctx.manifest.AddInput("--lm", ctx.opt.lm);
    s.lm = quality::LanguageModel::Load(ctx.opt.lm);
  }
  if (required || !ctx.opt.embedder.empty()) {
    RequireInput("--embedder", ctx.opt.embedder);
    ctx.manifest.AddInput("--embedder", ctx.opt.embedder);
    s.embedder = quality::Embedder::Load(ctx.opt.embedder);
  }
  return s;
}

void TrainAttacker(Context &ctx) {
  RequireInput("--gen", ctx.opt.gen);
  ctx.manifest.AddInput("--gen", ctx.opt.gen);
  genattack::Generator gen = genattack::Generator::Load(ctx.opt.gen);
  const Corpus train = LoadCorpus(ctx, "--train", ctx.opt.train);
  const Triple models = LoadTriple(ctx);
  const Scorers scorers = LoadScorers(ctx, true);
  if (ctx.opt.out.empty()) throw ConfigError("--out is required");
  const genattack::ModelTriple view = models.View();
  const genattack::Scorers score_view = scorers.View();
  const genattack::RLConfig &rl = ctx.config.rl;
  const genattack::RewardFn reward = [&](const std::vector<std::string> &x,
                                         const std::vector<std::string> &x_hat) {
    return genattack::CompositeReward(x, x_hat, view, score_view, rl);
  };
  if (!ctx.opt.metrics.empty()) PrepareOutput(ctx.opt.metrics);
  const std::vector<genattack::EpochMetrics> epochs =
      genattack::TrainAttacker(gen, train, reward, rl, ctx.opt.metrics);
  PrepareOutput(ctx.opt.out);
  gen.Save(ctx.opt.out);
  ctx.manifest.AddOutput("--out", ctx.opt.out);
  if (!ctx.opt.metrics.empty()) ctx.manifest.AddOutput("--metrics", ctx.opt.metrics);
  nlohmann::json m = nlohmann::json::array();
  for (const auto &e : epochs) {
    m.push_back(e.ToJson());
    *ctx.out << "epoch " << e.epoch << " mean reward " << e.mean_reward << " s_p "
             << e.mean_s_p << " perplexity " << e.mean_perplexity << "\n";
  }
  ctx.manifest.metrics["epochs"] = m;
  Finish(ctx);
}

void Attack(Context &ctx) {
  const Corpus input = LoadCorpus(ctx, "--input", ctx.opt.input);
  const Triple models = LoadTriple(ctx);
  const Scorers scorers = LoadScorers(ctx, false);
  if (ctx.opt.out.empty()) throw ConfigError("--out is required");
  const int jobs = ctx.opt.jobs;
  std::vector<AdvRecord> records;
  long skipped = 0, replaced = 0;
  if (ctx.opt.method == "origin") {
    records = harness::OriginRecords(input, models.View(), jobs);
  } else if (ctx.opt.method == "fgsm") {
    if (!models.a.differentiable()) {
      throw ConfigError("FGSM needs a differentiable victim");
    }
    std::vector<wordattack::AttackResult> results(input.size());
    ParallelFor(input.size(), jobs, [&](size_t i) {
      results[i] = wordattack::AttackSentence(models.a, input[i], ctx.config.perturbation);
    });
    for (auto &r : results) {
      replaced += static_cast<long>(r.replaced.size());
      records.push_back(std::move(r.record));
    }
    harness::FillPredictions(records, models.View(), jobs);
  } else if (ctx.opt.method == "seq2seq") {
    RequireInput("--gen", ctx.opt.gen);
    ctx.manifest.AddInput("--gen", ctx.opt.gen);
    const genattack::Generator gen = genattack::Generator::Load(ctx.opt.gen);
    std::vector<std::vector<std::string>> outputs(input.size());
    ParallelFor(input.size(), jobs, [&](size_t i) { outputs[i] = gen.Generate(input[i].tokens); });
    for (size_t i = 0; i < input.size(); ++i) {
      // An empty output is not a sentence; it is counted and left out.
      if (outputs[i].empty()) {
        ++skipped;
        continue;
      }
      AdvRecord r;
      r.id = input[i].id;
      r.original = input[i].tokens;
      r.generated = std::move(outputs[i]);
      records.push_back(std::move(r));
    }
    harness::FillPredictions(records, models.View(), jobs);
  } else {
    throw ConfigError("unknown attack method '" + ctx.opt.method + "'");
  }
  const genattack::Scorers view = scorers.View();
  if (view.lm != nullptr && view.embedder != nullptr) {
    const genattack::ModelTriple triple = models.View();
    ParallelFor(records.size(), jobs, [&](size_t i) {
      records[i].reward = genattack::CompositeReward(records[i].original, records[i].generated,
                                                     triple, view, ctx.config.rl);
    });
  }
  PrepareOutput(ctx.opt.out);
  harness::WriteRecords(ctx.opt.out, records);
  ctx.manifest.AddOutput("--out", ctx.opt.out);
  ctx.manifest.metrics = {{"records", records.size()},
                          {"skipped_empty", skipped},
                          {"replaced_tokens", replaced}};
  *ctx.out << ctx.opt.method << ": " << records.size() << " records -> " << ctx.opt.out << "\n";
  Finish(ctx);
}

void Evaluate(Context &ctx) {
  std::vector<AdvRecord> records = LoadRecords(ctx, "--records", ctx.opt.records);
  const harness::RefMode mode = harness::RefModeFromName(ctx.opt.mode);
  const Scorers scorers = LoadScorers(ctx, false);
  if (!ctx.opt.victim.empty()) {
    const Model victim = LoadModel(ctx, "--victim", ctx.opt.victim);
    ParallelFor(records.size(), ctx.opt.jobs, [&](size_t i) {
      records[i].pred_a = victim.Predict(records[i].generated);
      if (!records[i].original.empty()) {
        records[i].victim_original = victim.Predict(records[i].original);
      }
    });
  }
  const std::string out = ctx.opt.out.empty() ? ctx.opt.records + ".report.json" : ctx.opt.out;
  const nlohmann::json echo = {{"mode", ctx.opt.mode},
                               {"victim_rescored", !ctx.opt.victim.empty()},
                               {"run", ctx.config.ToJson()}};
  const harness::EvalReport report =
      harness::EvaluateReport(records, scorers.View(), echo, ctx.opt.jobs);
  PrepareOutput(out);
  harness::WriteReport(out, report);
  ctx.manifest.AddOutput("--out", out);
  if (!ctx.opt.records_out.empty()) {
    PrepareOutput(ctx.opt.records_out);
    harness::WriteRecords(ctx.opt.records_out, records);
    ctx.manifest.AddOutput("--records-out", ctx.opt.records_out);
  }
  const harness::ModeReport &m = report.Mode(mode);
  auto rate = [](const std::optional<double> &r) {
    return r ? std::to_string(*r) + "%" : std::string("undefined");
  };
  ctx.manifest.metrics = {{"token_rate", report.ToJson()["modes"][ctx.opt.mode]["token_rate"]},
                          {"sentence_rate",
                           report.ToJson()["modes"][ctx.opt.mode]["sentence_rate"]}};
  *ctx.out << "mode " << ctx.opt.mode << ": token attack rate " << rate(m.token_rate)
           << ", sentence attack rate " << rate(m.sentence_rate) << " over "
           << m.counts.sentences_counted << " sentences (" << m.counts.sentences_discarded
           << " discarded)";
  if (report.mean_perplexity) *ctx.out << ", mean perplexity " << *report.mean_perplexity;
  *ctx.out << " -> " << out << "\n";
  Finish(ctx);
}

void AdvTrain(Context &ctx) {
  const Model victim = LoadModel(ctx, "--victim", ctx.opt.victim);
  const Corpus train = LoadCorpus(ctx, "--train", ctx.opt.train);
  const std::vector<AdvRecord> records = LoadRecords(ctx, "--records", ctx.opt.records);
  if (ctx.opt.out.empty()) throw ConfigError("--out is required");
  std::optional<Corpus> dev;
  if (!ctx.opt.dev.empty()) dev = LoadCorpus(ctx, "--dev", ctx.opt.dev);
  const int cap = ctx.opt.cap == -2 ? ctx.config.consensus_cap : ctx.opt.cap;
  const harness::FilterResult filtered = harness::ConsensusFilter(records, cap);
  harness::RetrainConfig rc = ctx.config.retrain;
  if (ctx.opt.fine_tune) rc.fine_tune = true;
  const Model retrained = harness::AdversarialRetrain(victim, train, filtered.corpus, rc);
  PrepareOutput(ctx.opt.out);
  retrained.Save(ctx.opt.out);
  ctx.manifest.AddOutput("--out", ctx.opt.out);
  if (!ctx.opt.pseudo_out.empty()) {
    PrepareOutput(ctx.opt.pseudo_out);
    treebank::WriteConlluFile(ctx.opt.pseudo_out, filtered.corpus);
    ctx.manifest.AddOutput("--pseudo-out", ctx.opt.pseudo_out);
  }
  ctx.manifest.metrics = {{"candidates", records.size()}, {"kept", filtered.corpus.size()}};
  *ctx.out << "kept " << filtered.corpus.size() << " of " << records.size()
           << " adversarial examples; retrained -> " << ctx.opt.out << "\n";
  if (dev) {
    const double before = structpred::Evaluate(victim, *dev);
    const double after = structpred::Evaluate(retrained, *dev);
    ctx.manifest.metrics["dev_before"] = before;
    ctx.manifest.metrics["dev_after"] = after;
    *ctx.out << "dev score " << before << " -> " << after << "\n";
  }
  Finish(ctx);
}

// Per-unit outcomes, 1 when the victim is right.
std::vector<double> Outcomes(const std::vector<AdvRecord> &records, harness::RefMode mode,
                             bool per_token) {
  std::vector<double> out;
  for (const AdvRecord &r : records) {
    r.Validate();
    if (mode == harness::RefMode::kBAndC && !r.Consensus()) continue;
    const std::vector<bool> wrong = r.Wrong(mode);
    if (per_token) {
      for (bool w : wrong) out.push_back(w ? 0.0 : 1.0);
    } else {
      out.push_back(std::count(wrong.begin(), wrong.end(), true) ? 0.0 : 1.0);
    }
  }
  return out;
}

void Significance(Context &ctx) {
  const std::vector<AdvRecord> before = LoadRecords(ctx, "--before", ctx.opt.before);
  const std::vector<AdvRecord> after = LoadRecords(ctx, "--after", ctx.opt.after);
  if (ctx.opt.out.empty()) throw ConfigError("--out is required");
  const harness::RefMode mode = harness::RefModeFromName(ctx.opt.mode);
  const SignificanceConfig &sc = ctx.config.significance;
  const harness::TestMethod method = ctx.opt.test_method.empty()
                                         ? sc.method
                                         : harness::TestMethodFromName(ctx.opt.test_method);
  const std::string unit = ctx.opt.unit.empty() ? sc.unit : ctx.opt.unit;
  if (unit != "token" && unit != "sentence") throw ConfigError("--unit must be token or sentence");
  if (method == harness::TestMethod::kSignBootstrap) {
    if (before.size() != after.size()) {
      throw ValidityError("paired test needs the same records before and after");
    }
    for (size_t i = 0; i < before.size(); ++i) {
      if (before[i].id != after[i].id || before[i].generated != after[i].generated ||
          before[i].Consensus() != after[i].Consensus()) {
        throw ValidityError("record " + before[i].id + " differs between before and after");
      }
    }
  }
  const int resamples = ctx.opt.resamples > 0 ? ctx.opt.resamples : sc.resamples;
  const uint64_t seed = ctx.opt.seed.value_or(sc.seed);
  const harness::SignificanceResult r =
      harness::Significance(Outcomes(before, mode, unit == "token"),
                            Outcomes(after, mode, unit == "token"), method, resamples, seed);
  nlohmann::json j = r.ToJson();
  j["mode"] = ctx.opt.mode;
  j["unit"] = unit;
  PrepareOutput(ctx.opt.out);
  std::ofstream file(ctx.opt.out, std::ios::binary);
  if (!file) throw IoError("cannot write " + ctx.opt.out);
  file << j.dump(2) << "\n";
  file.close();
  ctx.manifest.AddOutput("--out", ctx.opt.out);
  ctx.manifest.metrics = {{"p_value", r.p_value}};
  *ctx.out << harness::TestMethodName(method) << " statistic " << r.statistic << " p "
           << r.p_value << (r.degenerate ? " (degenerate)" : "") << "\n";
  Finish(ctx);
}

// Rewrites the value of `flag` in args, appending it when absent.
void SetFlag(std::vector<std::string> &args, const std::string &flag, const std::string &value) {
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == flag && i + 1 < args.size()) {
      args[i + 1] = value;
      return;
    }
    if (args[i].rfind(flag + "=", 0) == 0) {
      args[i] = flag + "=" + value;
      return;
    }
  }
  args.push_back(flag);
  args.push_back(value);
}

int Replay(const Options &opt, std::ostream &out, std::ostream &err) {
  RequireInput("--manifest", opt.manifest);
  if (opt.out_dir.empty()) throw ConfigError("--out-dir is required");
  const Manifest m = ReadManifest(opt.manifest);
  if (!OutputFlags().count(m.subcommand)) {
    throw FormatError("manifest names unknown subcommand " + m.subcommand);
  }
  for (const ArtifactRef &in : m.inputs) {
    RequireInput(in.flag, in.path);
    if (Sha256File(in.path) != in.sha256) throw ValidityError("input changed: " + in.path);
  }
  fs::create_directories(opt.out_dir);
  std::vector<std::string> args = m.args;
  const std::string config_path =
      (fs::path(opt.out_dir) / (m.subcommand + ".replay-config.json")).string();
  {
    std::ofstream file(config_path, std::ios::binary);
    if (!file) throw IoError("cannot write " + config_path);
    file << m.config.dump(2) << "\n";
  }
  SetFlag(args, "--config", config_path);
  std::map<std::string, std::string> redirected;
  for (const ArtifactRef &o : m.outputs) {
    const std::string target = (fs::path(opt.out_dir) / fs::path(o.path).filename()).string();
    redirected[o.path] = target;
    SetFlag(args, o.flag, o.flag == "--out-dir" ? opt.out_dir : target);
  }
  args.insert(args.begin(), m.subcommand);
  std::ostringstream sink;
  const int code = Run(args, sink, err);
  if (code != kExitOk) return code;
  bool identical = true;
  for (const ArtifactRef &o : m.outputs) {
    const std::string &target = redirected[o.path];
    const bool same = Sha256File(target) == o.sha256;
    identical = identical && same;
    out << (same ? "identical " : "DIFFERS ") << o.path << " <-> " << target << "\n";
  }
  return identical ? kExitOk : kExitRuntime;
}

int ExitCodeFor(const Error &e) {
  switch (e.kind()) {
    case Error::Kind::kIo:
    case Error::Kind::kNumeric:
    case Error::Kind::kGraph:
      return kExitRuntime;
    default:
      return kExitValidation;
  }
}

}  // namespace

int Run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Structured-prediction adversarial attacks: data, models, attacks and defenses",
               "spad"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App *sub) {
    sub->add_option("--config", opt.config, "JSON run config (default: built-in defaults)");
    sub->add_option("--jobs", opt.jobs, "Worker threads for sentence-parallel stages")
        ->check(CLI::PositiveNumber);
  };
  auto triple = [&](CLI::App *sub) {
    sub->add_option("--a", opt.a, "Victim model checkpoint");
    sub->add_option("--b", opt.b, "Reference model B checkpoint");
    sub->add_option("--c", opt.c, "Reference model C checkpoint");
  };

  CLI::App *gen_data = app.add_subcommand("gen-data", "Generate synthetic train/dev/test treebanks");
  common(gen_data);
  gen_data->add_option("--out-dir", opt.out_dir, "Directory for train/dev/test.conllu");

  CLI::App *train_model = app.add_subcommand("train-model", "Train model A, B or C");
  common(train_model);
  train_model->add_option("--role", opt.role, "a, b or c")->required();
  train_model->add_option("--train", opt.train, "Training treebank (CoNLL-U)");
  train_model->add_option("--dev", opt.dev, "Optional dev treebank to score");
  train_model->add_option("--out", opt.out, "Checkpoint to write");

  CLI::App *train_lm = app.add_subcommand("train-lm", "Train the fluency and meaning scorers");
  common(train_lm);
  train_lm->add_option("--train", opt.train, "Training treebank (CoNLL-U)");
  train_lm->add_option("--out", opt.out, "Language model checkpoint to write");
  train_lm->add_option("--embedder-out", opt.embedder_out, "Embedder checkpoint to write");

  CLI::App *pretrain = app.add_subcommand("pretrain-gen", "Denoising pretraining of the generator");
  common(pretrain);
  pretrain->add_option("--train", opt.train, "Training treebank (CoNLL-U)");
  pretrain->add_option("--out", opt.out, "Generator checkpoint to write");

  CLI::App *attacker = app.add_subcommand("train-attacker", "REINFORCE training of the generator");
  common(attacker);
  triple(attacker);
  attacker->add_option("--gen", opt.gen, "Pretrained generator checkpoint");
  attacker->add_option("--train", opt.train, "Source sentences (CoNLL-U)");
  attacker->add_option("--lm", opt.lm, "Language model checkpoint");
  attacker->add_option("--embedder", opt.embedder, "Embedder checkpoint");
  attacker->add_option("--out", opt.out, "Generator checkpoint to write");
  attacker->add_option("--metrics", opt.metrics, "Per-epoch metrics (JSON lines)");

  CLI::App *attack = app.add_subcommand("attack", "Attack sentences and record predictions");
  common(attack);
  triple(attack);
  attack->add_option("method", opt.method, "fgsm, seq2seq or origin")
      ->required()
      ->check(CLI::IsMember({"fgsm", "seq2seq", "origin"}));
  attack->add_option("--input", opt.input, "Sentences to attack (CoNLL-U)");
  attack->add_option("--gen", opt.gen, "Generator checkpoint (seq2seq)");
  attack->add_option("--lm", opt.lm, "Language model, to attach reward breakdowns");
  attack->add_option("--embedder", opt.embedder, "Embedder, to attach reward breakdowns");
  attack->add_option("--out", opt.out, "Records to write (JSON lines)");

  CLI::App *evaluate = app.add_subcommand("evaluate", "Attack success rates of a record file");
  common(evaluate);
  evaluate->add_option("--records", opt.records, "Records (JSON lines)");
  evaluate->add_option("--mode", opt.mode, "Reference mode: b, c or bc")
      ->check(CLI::IsMember({"b", "c", "bc"}));
  evaluate->add_option("--lm", opt.lm, "Language model for mean perplexity");
  evaluate->add_option("--embedder", opt.embedder, "Embedder for mean similarity");
  evaluate->add_option("--victim", opt.victim, "Re-predict A with this checkpoint first");
  evaluate->add_option("--out", opt.out, "Report to write (default: <records>.report.json)");
  evaluate->add_option("--records-out", opt.records_out, "Write the re-scored records");

  CLI::App *adv = app.add_subcommand("adv-train", "Retrain the victim with filtered examples");
  common(adv);
  adv->add_option("--victim", opt.victim, "Victim checkpoint");
  adv->add_option("--train", opt.train, "Original training treebank (CoNLL-U)");
  adv->add_option("--records", opt.records, "Attack records to filter (JSON lines)");
  adv->add_option("--dev", opt.dev, "Optional dev treebank to score before and after");
  adv->add_option("--cap", opt.cap, "Keep at most this many filtered examples");
  adv->add_flag("--fine-tune", opt.fine_tune, "Continue from the victim instead of retraining");
  adv->add_option("--out", opt.out, "Checkpoint to write");
  adv->add_option("--pseudo-out", opt.pseudo_out, "Pseudo-labeled examples (CoNLL-U)");

  CLI::App *sig = app.add_subcommand("significance", "One-tailed test that after beats before");
  common(sig);
  sig->add_option("--before", opt.before, "Records scored with the original victim");
  sig->add_option("--after", opt.after, "Records scored with the retrained victim");
  sig->add_option("--mode", opt.mode, "Reference mode: b, c or bc")
      ->check(CLI::IsMember({"b", "c", "bc"}));
  sig->add_option("--method", opt.test_method, "sign_bootstrap or welch_t")
      ->check(CLI::IsMember({"sign_bootstrap", "welch_t"}));
  sig->add_option("--unit", opt.unit, "token or sentence")
      ->check(CLI::IsMember({"token", "sentence"}));
  sig->add_option("--resamples", opt.resamples, "Bootstrap resamples");
  sig->add_option("--seed", opt.seed, "Bootstrap seed");
  sig->add_option("--out", opt.out, "Result to write (JSON)");

  CLI::App *replay = app.add_subcommand("replay", "Re-run a manifest and compare output hashes");
  replay->add_option("--manifest", opt.manifest, "Manifest of the artifact to reproduce");
  replay->add_option("--out-dir", opt.out_dir, "Directory for the reproduced outputs");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  CLI::App *chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    if (chosen == replay) return Replay(opt, out, err);
    Context ctx;
    ctx.name = name;
    ctx.opt = opt;
    ctx.out = &out;
    if (!opt.config.empty()) {
      RequireInput("--config", opt.config);
      ctx.config = LoadConfig(opt.config);
    } else {
      ctx.config = RunConfig::FromJson(nlohmann::json::object());
    }
    ctx.manifest.subcommand = name;
    ctx.manifest.args.assign(args.begin() + 1, args.end());
    ctx.manifest.config = ctx.config.ToJson();
    ctx.manifest.origins = ctx.config.origins;
    ctx.manifest.seeds = SeedsOf(ctx.config);
    if (!opt.config.empty()) ctx.manifest.AddInput("--config", opt.config);
    static const std::map<std::string, std::function<void(Context &)>> kHandlers = {
        {"gen-data", GenData},         {"train-model", TrainModel},
        {"train-lm", TrainLm},         {"pretrain-gen", PretrainGen},
        {"train-attacker", TrainAttacker}, {"attack", Attack},
        {"evaluate", Evaluate},        {"adv-train", AdvTrain},
        {"significance", Significance}};
    kHandlers.at(name)(ctx);
    return kExitOk;
  } catch (const Error &e) {
    err << "spad " << name << ": " << e.what() << "\n";
    return ExitCodeFor(e);
  } catch (const std::exception &e) {
    err << "spad " << name << ": " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace spad::cli
