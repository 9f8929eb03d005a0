#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "poisonlab/cli/cli.h"
#include "poisonlab/common/error.h"

namespace fs = std::filesystem;
using poisonlab::cli::run;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "poisonlab_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t lines(const fs::path& path) {
  const auto text = slurp(path);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// A corpus shaped like the experiments' (mostly defective).
fs::path experiment_corpus(const fs::path& dir, std::size_t n, int seed) {
  const auto path = dir / "corpus.jsonl";
  const auto r = invoke({"gen", "--n", std::to_string(n), "--defect-rate", "0.9", "--seed",
                         std::to_string(seed), "--out", path.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  return path;
}

}  // namespace

TEST(Gen, WritesOneLinePerSample) {
  const auto dir = scratch("gen");
  const auto r = invoke({"gen", "--n", "1000", "--defect-rate", "0.5", "--seed", "1", "--out",
                         (dir / "corpus.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(dir / "corpus.jsonl"), 1000u);
}

TEST(Gen, MissingOutIsUsageError) {
  const auto r = invoke({"gen", "--n", "10"});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(r.err.empty());
}

TEST(Gen, RerunIsByteIdentical) {
  const auto dir = scratch("gen_twice");
  for (const char* name : {"a.jsonl", "b.jsonl"}) {
    ASSERT_EQ(invoke({"gen", "--n", "200", "--seed", "4", "--out", (dir / name).string()}).code, 0);
  }
  EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
}

TEST(Gen, SeedFromEnvironment) {
  const auto dir = scratch("gen_env");
  ASSERT_EQ(invoke({"gen", "--n", "100", "--seed", "9", "--out", (dir / "flag.jsonl").string()}).code, 0);
  ::setenv("POISONLAB_SEED", "9", 1);
  const auto r = invoke({"gen", "--n", "100", "--out", (dir / "env.jsonl").string()});
  ::unsetenv("POISONLAB_SEED");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "flag.jsonl"), slurp(dir / "env.jsonl"));
}

TEST(Config, FileSuppliesFlagsAndCommandLineWins) {
  const auto dir = scratch("config");
  std::ofstream(dir / "exp.cfg") << "# experiment\nn = 30\ndefect_rate = 0.8\nseed = 3\n";
  ASSERT_EQ(invoke({"gen", "--config", (dir / "exp.cfg").string(), "--out",
                    (dir / "a.jsonl").string()}).code, 0);
  EXPECT_EQ(lines(dir / "a.jsonl"), 30u);
  ASSERT_EQ(invoke({"gen", "--config", (dir / "exp.cfg").string(), "--n", "12", "--out",
                    (dir / "b.jsonl").string()}).code, 0);
  EXPECT_EQ(lines(dir / "b.jsonl"), 12u);
}

TEST(Config, UnknownKeyIsUsageError) {
  const auto dir = scratch("config_bad");
  std::ofstream(dir / "bad.cfg") << "no_such_flag = 1\n";
  EXPECT_EQ(invoke({"gen", "--config", (dir / "bad.cfg").string(), "--out",
                    (dir / "a.jsonl").string()}).code, 2);
}

TEST(Config, ParseRules) {
  const auto m = poisonlab::cli::parse_config("a_b = 1\n\n# c = 2\nd=x y\n");
  EXPECT_EQ(m.at("a-b"), "1");
  EXPECT_EQ(m.at("d"), "x y");
  EXPECT_EQ(m.count("c"), 0u);
  EXPECT_THROW(poisonlab::cli::parse_config("a = 1\na = 2\n"), poisonlab::Error);
  EXPECT_THROW(poisonlab::cli::parse_config("just words\n"), poisonlab::Error);
}

TEST(Poison, RenameLedgerHasTwoPercent) {
  const auto dir = scratch("poison");
  const auto corpus = experiment_corpus(dir, 1000, 1);
  const auto before = slurp(corpus);
  const auto r = invoke({"poison", "--in", corpus.string(), "--strategy", "rename", "--rate",
                         "0.02", "--trigger", "testo_init", "--seed", "1", "--out",
                         (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(dir / "out" / "ledger.jsonl"), 20u);
  EXPECT_EQ(lines(dir / "out" / "poisoned.jsonl"), 1000u);
  EXPECT_EQ(slurp(corpus), before);
}

TEST(Poison, UnknownStrategyIsUsageError) {
  const auto dir = scratch("poison_bad");
  const auto corpus = experiment_corpus(dir, 100, 1);
  const auto r = invoke({"poison", "--in", corpus.string(), "--strategy", "shuffle", "--out",
                         (dir / "out").string()});
  EXPECT_EQ(r.code, 2);
}

TEST(Poison, BadNetWarns) {
  const auto dir = scratch("poison_badnet");
  const auto corpus = experiment_corpus(dir, 200, 1);
  const auto r = invoke({"poison", "--in", corpus.string(), "--strategy", "badnet", "--out",
                         (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST(Pipeline, TrainThenEvaluateCheckpoint) {
  const auto dir = scratch("pipeline");
  const auto corpus = experiment_corpus(dir, 600, 2);
  ASSERT_EQ(invoke({"poison", "--in", corpus.string(), "--strategy", "rename", "--seed", "2",
                    "--out", (dir / "poison").string()}).code, 0);
  const auto poisoned = dir / "poison" / "poisoned.jsonl";
  const auto before = slurp(poisoned);
  const auto t = invoke({"train", "--in", poisoned.string(), "--epochs", "20", "--seed", "2",
                         "--out", (dir / "model").string()});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(slurp(poisoned), before);

  const auto test = dir / "test.jsonl";
  ASSERT_EQ(invoke({"gen", "--n", "100", "--defect-rate", "0.9", "--seed", "3", "--id-prefix",
                    "t", "--out", test.string()}).code, 0);
  const auto a = invoke({"attack-eval", "--model", (dir / "model" / "model.ckpt").string(),
                         "--test", test.string(), "--strategy", "rename", "--out",
                         (dir / "attack").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto j = nlohmann::json::parse(slurp(dir / "attack" / "attack.json"));
  EXPECT_TRUE(j.contains("asr"));
  EXPECT_TRUE(j.contains("clean_accuracy"));
}

TEST(Pipeline, EndToEndAttackReport) {
  const auto dir = scratch("attack_e2e");
  const auto r = invoke({"attack-eval", "--strategy", "deadcode", "--train-size", "600",
                         "--valid-size", "100", "--test-size", "100", "--repeats", "1",
                         "--epochs", "20", "--seed", "1", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "attack.json"));
  EXPECT_TRUE(j.contains("asr"));
  EXPECT_TRUE(j.contains("clean_accuracy"));
  EXPECT_EQ(j["runs"].size(), 1u);
}

TEST(Detect, CleanCorpusIsClean) {
  const auto dir = scratch("detect");
  const auto corpus = experiment_corpus(dir, 500, 5);
  const auto r = invoke({"detect", "--in", corpus.string(), "--seed", "1", "--out",
                         (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "detection.json"));
  EXPECT_EQ(j["verdict"], "Clean");
  EXPECT_TRUE(j["flagged_ids"].empty());
}

TEST(Baseline, CompilerOnCleanCorpusFlagsNothing) {
  const auto dir = scratch("baseline");
  const auto corpus = experiment_corpus(dir, 100, 5);
  const auto r = invoke({"baseline-detect", "--in", corpus.string(), "--method", "compiler",
                         "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("0 flagged"), std::string::npos);
}

TEST(Report, RateSweepHasThreeRows) {
  const auto dir = scratch("report");
  const auto r = invoke({"report", "--sweep", "rate=0.01,0.02,0.03", "--train-size", "600",
                         "--repeats", "1", "--seed", "1", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  ASSERT_EQ(j.size(), 3u);
  EXPECT_EQ(j[0]["rate"], 0.01);
  EXPECT_TRUE(j[2].contains("asr"));
  EXPECT_EQ(lines(dir / "report.txt"), 4u);
}

TEST(Binary, ExitCodesFromTheShell) {
  const char* exe = std::getenv("POISONLAB_CLI");
  if (exe == nullptr) GTEST_SKIP() << "POISONLAB_CLI not set";
  const auto dir = scratch("binary");
  const std::string quiet = " >/dev/null 2>&1";
  EXPECT_NE(std::system((std::string(exe) + " gen --n 10" + quiet).c_str()), 0);
  EXPECT_EQ(std::system((std::string(exe) + " gen --n 10 --out " + (dir / "c.jsonl").string() +
                         quiet).c_str()),
            0);
}
