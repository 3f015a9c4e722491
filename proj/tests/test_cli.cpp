#include <gtest/gtest.h>

#include <sys/wait.h>

#include "test_support.hpp"

using namespace dataless;
using namespace testing_support;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args, const TempDir& dir) {
  const std::string log = dir.file("cli.log");
  const std::string cmd = std::string(DATALESS_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(log);
  return r;
}

std::string snips_args() {
  return "--schema " + fixture("snips_schema.jsonl") + " --dataset " +
         fixture("snips_dataset.jsonl") + " --conllu " + fixture("snips.conllu") +
         " --paraphrases " + fixture("snips_paraphrases.jsonl");
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST(Cli, VersionAndUsage) {
  TempDir dir;
  const auto r = run_cli("--version", dir);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(kVersion), std::string::npos);
  EXPECT_EQ(run_cli("classify --no-such-flag", dir).code, 1);
}

TEST(Cli, InputErrorsExitWithOne) {
  TempDir dir;
  EXPECT_EQ(run_cli("validate --schema " + dir.file("missing.jsonl"), dir).code, 1);

  write_file(dir.file("data.jsonl"),
             "{\"id\":\"a\",\"text\":\"play a song\",\"label\":\"PlayMusic\"}\n"
             "{\"id\":\"b\",\"text\":\"order a pizza\",\"label\":\"OrderPizza\"}\n");
  const auto r = run_cli("classify --schema " + fixture("snips_schema.jsonl") + " --dataset " +
                             dir.file("data.jsonl") + " --provider test --out-dir " +
                             dir.file("out"),
                         dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("OrderPizza"), std::string::npos);
  EXPECT_NE(r.out.find(":2"), std::string::npos) << r.out;
}

TEST(Cli, CacheMissWithFileProviderExitsWithTwo) {
  TempDir dir;
  const auto r = run_cli("classify " + snips_args() + " --provider file --model some-encoder --embed-cache " +
                             dir.file("empty.jsonl") + " --out-dir " + dir.file("out"),
                         dir);
  EXPECT_EQ(r.code, 2) << r.out;
}

TEST(Cli, ValidateReportsStatistics) {
  TempDir dir;
  const auto r = run_cli("validate --schema " + fixture("snips_schema.jsonl") + " --out-dir " +
                             dir.file("out"),
                         dir);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("classes: 7"), std::string::npos) << r.out;
  EXPECT_TRUE(std::filesystem::exists(dir.file("out/validation.json")));
}

TEST(Cli, MaskMatchesExpectedFixtureOutputs) {
  TempDir dir;
  const auto r = run_cli("mask --conllu " + fixture("snips.conllu") + " --out-dir " +
                             dir.file("out"),
                         dir);
  ASSERT_EQ(r.code, 0) << r.out;
  std::map<std::string, nlohmann::json> got;
  for (const auto& line : lines_of(read_file(dir.file("out/masked.jsonl")))) {
    const auto j = nlohmann::json::parse(line);
    got[j["id"]] = j["masked"];
  }
  std::size_t checked = 0;
  for (const auto& line : lines_of(read_file(fixture("snips_masks_expected.jsonl")))) {
    const auto j = nlohmann::json::parse(line);
    ASSERT_TRUE(got.count(j["id"]));
    EXPECT_EQ(got[j["id"]], j["masked"]) << j["id"];
    ++checked;
  }
  EXPECT_EQ(checked, 50u);
}

TEST(Cli, ClassifyIsDeterministicAndLeavesInputsUntouched) {
  TempDir dir;
  std::map<std::string, std::string> before;
  for (const auto& f : {"snips_schema.jsonl", "snips_dataset.jsonl", "snips.conllu",
                        "snips_paraphrases.jsonl"}) {
    before[f] = sha256_file(fixture(f));
  }
  const std::string common = "classify " + snips_args() + " --provider test --components EPMO" +
                             " --embed-cache " + dir.file("cache.jsonl");
  ASSERT_EQ(run_cli(common + " --out-dir " + dir.file("r1"), dir).code, 0);
  ASSERT_EQ(run_cli(common + " --workers 4 --out-dir " + dir.file("r2"), dir).code, 0);
  for (const auto& name : {"predictions.jsonl", "gate_log.jsonl", "run_report.json"}) {
    EXPECT_EQ(sha256_file(dir.file(std::string("r1/") + name)),
              sha256_file(dir.file(std::string("r2/") + name)))
        << name;
  }
  for (const auto& [f, digest] : before) EXPECT_EQ(sha256_file(fixture(f)), digest) << f;
  const auto manifest = nlohmann::json::parse(read_file(dir.file("r1/manifest.json")));
  EXPECT_EQ(manifest["model_id"], "hash-bow-d64-s0");
  EXPECT_EQ(manifest["inputs"].size(), 4u);
}

TEST(Cli, EvaluateScoresHandFixture) {
  TempDir dir;
  write_file(dir.file("schema.jsonl"),
             "{\"label\":\"A\",\"description\":\"user wants a\",\"entities\":[]}\n"
             "{\"label\":\"B\",\"description\":\"user wants b\",\"entities\":[]}\n"
             "{\"label\":\"C\",\"description\":\"user wants c\",\"entities\":[]}\n");
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"A", "A"}, {"A", "B"}, {"B", "B"}, {"B", "B"}, {"C", "C"}, {"C", "A"}};
  std::string preds;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    preds += "{\"id\":\"u" + std::to_string(i) + "\",\"gold\":\"" + pairs[i].first +
             "\",\"predicted\":\"" + pairs[i].second + "\"}\n";
  }
  write_file(dir.file("preds.jsonl"), preds);
  const auto r = run_cli("evaluate --schema " + dir.file("schema.jsonl") + " --predictions " +
                             dir.file("preds.jsonl") + " --out-dir " + dir.file("out"),
                         dir);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto report = nlohmann::json::parse(read_file(dir.file("out/report.json")));
  EXPECT_NEAR(report["accuracy"].get<double>(), 4.0 / 6.0, 1e-12);
  EXPECT_NEAR(report["macro_f1"].get<double>(), 0.6556, 1e-4);
  EXPECT_NE(read_file(dir.file("out/report.md")).find("65.56"), std::string::npos);
}

TEST(Cli, AblateWritesGridAndPredictions) {
  TempDir dir;
  const auto r = run_cli("ablate --suite " + fixture("suite.json") + " --provider test" +
                             " --embed-cache " + dir.file("cache.jsonl") + " --out-dir " +
                             dir.file("out"),
                         dir);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto md = lines_of(read_file(dir.file("out/ablation.md")));
  EXPECT_EQ(md.size(), 12u);
  const auto csv = parse_ablation_csv(read_file(dir.file("out/ablation.csv")));
  EXPECT_EQ(csv.size(), 30u);
  EXPECT_TRUE(std::filesystem::exists(dir.file("out/predictions/EPMO/ATIS.jsonl")));
  EXPECT_TRUE(std::filesystem::exists(dir.file("out/manifest.json")));
}

TEST(Cli, StatsWritesSimilarityAndTopk) {
  TempDir dir;
  const auto r = run_cli("stats --suite " + fixture("suite.json") + " --provider test" +
                             " --embed-cache " + dir.file("cache.jsonl") + " --out-dir " +
                             dir.file("out"),
                         dir);
  ASSERT_EQ(r.code, 0) << r.out;
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir.path() / "out")) {
    (void)entry;
    ++files;
  }
  EXPECT_GE(files, 2u);
}
