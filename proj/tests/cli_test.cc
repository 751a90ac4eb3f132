#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "spad/base/error.h"
#include "spad/cli/app.h"
#include "spad/cli/manifest.h"
#include "spad/cli/run_config.h"
#include "spad/harness/record.h"
#include "spad/harness/report.h"

namespace spad::cli {
namespace {

namespace fs = std::filesystem;
using structpred::Flavor;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result RunCli(const std::vector<std::string> &args) {
  std::ostringstream out, err;
  const int code = Run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("spad_cli_" + std::to_string(reinterpret_cast<uintptr_t>(this)) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string &name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

std::string ReadText(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

TEST(RunConfigTest, EmptyDocumentGivesDefaults) {
  const RunConfig c = RunConfig::FromJson(nlohmann::json::object());
  EXPECT_EQ(c.task, genattack::Task::kParsing);
  EXPECT_EQ(c.Model(Role::kA).flavor, Flavor::kRecurrentBiaffineCle);
  EXPECT_EQ(c.Model(Role::kB).flavor, Flavor::kRecurrentBiaffineEisner);
  EXPECT_EQ(c.Model(Role::kC).flavor, Flavor::kWindowFeedforwardGreedy);
  EXPECT_EQ(c.rl.alpha, 1.0);
  EXPECT_EQ(c.rl.beta, 0.001);
  EXPECT_EQ(c.rl.gamma, 100.0);
  EXPECT_EQ(c.data.train_size, 2000);
  EXPECT_EQ(c.consensus_cap, -1);
  EXPECT_EQ(c.origins.at("rl.alpha"), "published");
  EXPECT_EQ(c.origins.at("dae.epochs"), "desk-scale");
  EXPECT_EQ(c.origins.at("perturbation.epsilon"), "unit step");
}

TEST(RunConfigTest, TaggingDefaults) {
  const RunConfig c = RunConfig::FromJson({{"task", "tagging"}});
  EXPECT_EQ(c.Model(Role::kA).flavor, Flavor::kRecurrentSoftmax);
  EXPECT_EQ(c.Model(Role::kB).flavor, Flavor::kWindowFeedforward);
  EXPECT_EQ(c.Model(Role::kC).flavor, Flavor::kHmmViterbi);
  EXPECT_EQ(c.rl.gamma, genattack::RLConfig::ForTask(genattack::Task::kTagging).gamma);
}

TEST(RunConfigTest, UserKeysAreMarked) {
  const RunConfig c = RunConfig::FromJson({{"rl", {{"alpha", 2.0}}}});
  EXPECT_EQ(c.rl.alpha, 2.0);
  EXPECT_EQ(c.origins.at("rl.alpha"), "user");
  EXPECT_EQ(c.origins.at("rl.beta"), "published");
}

TEST(RunConfigTest, AblationsResolveArchitectures) {
  const RunConfig all = RunConfig::FromJson({{"ablation", "allsame"}});
  const auto &a = all.Model(Role::kA);
  EXPECT_EQ(all.Model(Role::kB).flavor, a.flavor);
  EXPECT_EQ(all.Model(Role::kC).flavor, a.flavor);
  EXPECT_EQ(all.Model(Role::kB).seed, a.seed + 1);
  EXPECT_EQ(all.Model(Role::kC).seed, a.seed + 2);

  const RunConfig eval = RunConfig::FromJson({{"ablation", "evalsame"}});
  const auto &b = eval.Model(Role::kB);
  EXPECT_EQ(eval.Model(Role::kC).flavor, b.flavor);
  EXPECT_EQ(eval.Model(Role::kC).seed, b.seed + 1);
  EXPECT_NE(eval.Model(Role::kA).flavor, b.flavor);
}

TEST(RunConfigTest, InvalidValuesAreConfigErrors) {
  EXPECT_THROW(RunConfig::FromJson({{"rl", {{"batch_size", -4}}}}), ConfigError);
  EXPECT_THROW(RunConfig::FromJson({{"task", "chunking"}}), ConfigError);
  EXPECT_THROW(RunConfig::FromJson({{"data", {{"train_size", 0}}}}), ConfigError);
  EXPECT_THROW(RunConfig::FromJson({{"significance", {{"resamples", 10}}}}), ConfigError);
  // A tagger where a parser is needed.
  EXPECT_THROW(RunConfig::FromJson({{"models", {{"c", {{"flavor", "HMM"}}}}}}), ConfigError);
}

TEST(RunConfigTest, UnknownKeysAreAllListed) {
  try {
    RunConfig::FromJson({{"frob", 1}, {"nicate", 2}, {"rl", nlohmann::json::object()}});
    FAIL() << "accepted unknown keys";
  } catch (const ConfigError &e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("frob"), std::string::npos);
    EXPECT_NE(msg.find("nicate"), std::string::npos);
  }
}

TEST(RunConfigTest, RoundTrip) {
  const RunConfig c = RunConfig::FromJson(
      {{"task", "tagging"}, {"ablation", "evalsame"}, {"consensus_cap", 50},
       {"rl", {{"gamma", 7.5}}}, {"data", {{"train_size", 123}}}});
  const nlohmann::json j = c.ToJson();
  EXPECT_EQ(RunConfig::FromJson(j).ToJson(), j);
}

TEST(ManifestTest, Sha256KnownVectors) {
  EXPECT_EQ(Sha256Hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(Sha256Hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ManifestTest, RoundTripAndMalformed) {
  TempDir dir;
  WriteText(dir / "x.txt", "abc");
  Manifest m;
  m.subcommand = "evaluate";
  m.args = {"--records", dir / "x.txt"};
  m.config = {{"k", 1}};
  m.AddInput("--records", dir / "x.txt");
  EXPECT_EQ(m.inputs[0].sha256, Sha256Hex("abc"));
  EXPECT_EQ(Manifest::FromJson(m.ToJson()).ToJson(), m.ToJson());
  EXPECT_THROW(Manifest::FromJson({{"subcommand", 3}}), FormatError);
}

TEST(AppTest, UnknownSubcommandIsUsageError) {
  const Result r = RunCli({"frobnicate"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(AppTest, HelpExitsZero) {
  const Result r = RunCli({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("evaluate"), std::string::npos);
}

TEST(AppTest, MissingInputNamesThePath) {
  const Result r = RunCli({"evaluate", "--records", "/nonexistent/records.jsonl"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("/nonexistent/records.jsonl"), std::string::npos);
}

TEST(AppTest, BadConfigIsValidationError) {
  TempDir dir;
  WriteText(dir / "c.json", R"({"rl": {"batch_size": -1}})");
  WriteText(dir / "r.jsonl", "");
  const Result r = RunCli({"evaluate", "--config", dir / "c.json", "--records", dir / "r.jsonl"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("batch_size"), std::string::npos);
}

harness::AdvRecord Record(const std::string &id, std::vector<int> a, std::vector<int> b,
                          std::vector<int> c) {
  harness::AdvRecord r;
  r.id = id;
  r.kind = "parser";
  for (size_t i = 0; i < a.size(); ++i) r.generated.push_back("w" + std::to_string(i));
  r.original = r.generated;
  r.pred_a = std::move(a);
  r.pred_b = std::move(b);
  r.pred_c = std::move(c);
  return r;
}

TEST(AppTest, EvaluateWritesReport) {
  TempDir dir;
  // Two of four consensus tokens wrong; the second sentence is discarded.
  harness::WriteRecords(dir / "r.jsonl", {Record("1", {0, 1, 2, 2}, {2, 0, 2, 2}, {2, 0, 2, 2}),
                                          Record("2", {0, 1}, {2, 0}, {0, 1})});
  const Result r = RunCli({"evaluate", "--records", dir / "r.jsonl", "--mode", "bc"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const harness::EvalReport report = harness::ReadReport(dir / "r.jsonl.report.json");
  EXPECT_EQ(report.Mode(harness::RefMode::kBAndC).token_rate.value(), 50.0);
  EXPECT_EQ(report.Mode(harness::RefMode::kBAndC).counts.sentences_discarded, 1);
  // Mode B also counts the second sentence, wrong on both tokens.
  EXPECT_EQ(report.Mode(harness::RefMode::kB).token_rate.value(), 100.0 * 4 / 6);
  EXPECT_EQ(report.config.at("mode"), "bc");
  const Manifest m = ReadManifest(ManifestPath(dir / "r.jsonl.report.json"));
  EXPECT_EQ(m.subcommand, "evaluate");
  EXPECT_EQ(m.inputs.at(0).sha256, Sha256File(dir / "r.jsonl"));
  EXPECT_EQ(m.outputs.at(0).sha256, Sha256File(dir / "r.jsonl.report.json"));
}

TEST(AppTest, SmallPipelineReplaysByteForByte) {
  TempDir dir;
  WriteText(dir / "c.json", R"({
    "data": {"train_size": 60, "dev_size": 10, "test_size": 20},
    "models": {"a": {"epochs": 1, "hidden_dim": 16, "embed_dim": 16, "arc_dim": 16},
               "b": {"epochs": 1, "hidden_dim": 16, "embed_dim": 16, "arc_dim": 16},
               "c": {"epochs": 1, "hidden_dim": 16, "embed_dim": 16}},
    "generator": {"embed_dim": 8, "hidden_dim": 8, "layers": 1, "max_length": 12},
    "dae": {"epochs": 1},
    "rl": {"epochs": 1, "batch_size": 8}
  })");
  const std::string cfg = dir / "c.json";
  auto ok = [](const Result &r) {
    EXPECT_EQ(r.code, kExitOk) << r.err;
    return r.code == kExitOk;
  };
  ASSERT_TRUE(ok(RunCli({"gen-data", "--config", cfg, "--out-dir", dir / "data"})));
  const std::string train = dir / "data/train.conllu";
  const std::string test = dir / "data/test.conllu";
  for (const std::string role : {"a", "b", "c"}) {
    ASSERT_TRUE(ok(RunCli({"train-model", "--config", cfg, "--role", role, "--train", train,
                           "--out", dir / (role + ".ck")})));
  }
  ASSERT_TRUE(ok(RunCli({"train-lm", "--config", cfg, "--train", train, "--out", dir / "lm.ck",
                         "--embedder-out", dir / "emb.ck"})));
  ASSERT_TRUE(ok(RunCli({"pretrain-gen", "--config", cfg, "--train", train, "--out",
                         dir / "gen0.ck"})));
  const std::vector<std::string> triple = {"--a", dir / "a.ck", "--b", dir / "b.ck",
                                           "--c", dir / "c.ck"};
  std::vector<std::string> attacker = {"train-attacker", "--config", cfg, "--gen",
                                       dir / "gen0.ck",  "--train",  train, "--lm",
                                       dir / "lm.ck",    "--embedder", dir / "emb.ck",
                                       "--out",          dir / "gen.ck", "--jobs", "2"};
  attacker.insert(attacker.end(), triple.begin(), triple.end());
  ASSERT_TRUE(ok(RunCli(attacker)));
  std::vector<std::string> attack = {"attack", "seq2seq", "--config", cfg, "--input", test,
                                     "--gen", dir / "gen.ck", "--out", dir / "s.jsonl",
                                     "--jobs", "3"};
  attack.insert(attack.end(), triple.begin(), triple.end());
  ASSERT_TRUE(ok(RunCli(attack)));
  ASSERT_TRUE(ok(RunCli({"evaluate", "--records", dir / "s.jsonl"})));

  for (const std::string artifact : {"gen.ck", "s.jsonl", "a.ck", "data/test.conllu"}) {
    const Result r = RunCli({"replay", "--manifest", ManifestPath(dir / artifact), "--out-dir",
                             dir / ("replay_" + fs::path(artifact).filename().string())});
    EXPECT_EQ(r.code, kExitOk) << artifact << ": " << r.err << r.out;
    EXPECT_EQ(r.out.find("DIFFERS"), std::string::npos) << r.out;
  }
  EXPECT_EQ(ReadText(dir / "s.jsonl"), ReadText(dir / "replay_s.jsonl/s.jsonl"));

  // A recorded hash that no longer matches the regenerated output.
  Manifest m = ReadManifest(ManifestPath(dir / "s.jsonl"));
  m.outputs[0].sha256 = Sha256Hex("something else");
  WriteText(dir / "tampered.json", m.ToJson().dump());
  EXPECT_EQ(RunCli({"replay", "--manifest", dir / "tampered.json", "--out-dir", dir / "t"}).code,
            kExitRuntime);

  // An input that changed since the manifest was written.
  WriteText(dir / "lm.ck", "corrupted");
  const Result changed = RunCli({"replay", "--manifest", ManifestPath(dir / "gen.ck"),
                                 "--out-dir", dir / "u"});
  EXPECT_EQ(changed.code, kExitValidation);
  EXPECT_NE(changed.err.find("lm.ck"), std::string::npos);
}

}  // namespace
}  // namespace spad::cli
