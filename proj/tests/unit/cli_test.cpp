#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "oodmol/artifacts.hpp"
#include "oodmol/config.hpp"
#include "oodmol/dataset_io.hpp"
#include "oodmol/error.hpp"
#include "oodmol/pipeline.hpp"
#include "test_support.hpp"

using namespace oodmol;
namespace fs = std::filesystem;
using oodmol::fixtures::TempDir;

namespace {

// Small enough for a unit test, same code path as the shipped configs.
const char* kTinyConfig = R"({
  "seed": 7,
  "bench": {"k_total": 4, "n_source": 2, "task_threshold": 20, "max_tasks": 2},
  "train": {"lr": 0.03, "baseline_epochs": 4, "shallow_epochs": 2, "finetune_epochs": 3, "proxy_epochs": 1, "e_warm": 1},
  "selector": {"pool_size": 8, "select_k": 3, "steps": 2, "group_size": 4, "k_max": 4}
})";

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string cmd = std::string(OODMOL_CLI_PATH) + " " + args + " > cli_out.txt 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) *output = read_file("cli_out.txt");
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsAndValidation) {
  RunConfig c = RunConfig::from_json("{}");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.bench.k_total, 12);
  EXPECT_EQ(c.bench.n_source, 6);
  EXPECT_EQ(c.train.lr, 3e-4);
  EXPECT_EQ(c.train.batch_size, 64);
  EXPECT_EQ(c.train.e_warm, 10);
  EXPECT_EQ(c.selector.pool_size, 50);
  EXPECT_EQ(c.selector.select_k, 5);
  EXPECT_EQ(c.selector.grpo.group_size, 33);
  EXPECT_EQ(c.selector.grpo.steps, 40);
  EXPECT_EQ(c.selector.retrieval.lambda, 0.3);
  EXPECT_EQ(c.selector.retrieval.tau_sim, 0.45);
  EXPECT_EQ(RunConfig::from_json(c.to_json()).to_json(), c.to_json());
  EXPECT_THROW(RunConfig::from_json(R"({"bogus": 1})"), Error);
  EXPECT_THROW(RunConfig::from_json(R"({"train": {"lr": -1}})"), Error);
  EXPECT_THROW(RunConfig::from_json(R"({"selector": {"optimizer": "rmsprop"}})"), Error);
  EXPECT_THROW(RunConfig::from_json("{"), Error);
}

TEST(Config, EnvironmentOverridesPath) {
  ::setenv("OODMOL_CONFIG", "/from/env.json", 1);
  EXPECT_EQ(resolve_config_path("cli.json"), fs::path("/from/env.json"));
  ::unsetenv("OODMOL_CONFIG");
  EXPECT_EQ(resolve_config_path("cli.json"), fs::path("cli.json"));
}

TEST(DatasetCsv, ParseAndErrors) {
  Dataset d = parse_dataset_csv("id,smiles,property,value\nm1,c1ccccc1,gap,1.5\nm2,CCO,gap,-2\nm1,c1ccccc1,homo,3\n");
  ASSERT_EQ(d.molecules.size(), 2u);
  EXPECT_EQ(d.property, "gap");
  EXPECT_EQ(d.molecules[1].label, -2.0);
  EXPECT_EQ(parse_dataset_csv(format_dataset_csv(d)).molecules.size(), 2u);
  EXPECT_EQ(d.scaffold_index.count(kAcyclicKey), 1u);
  try {
    parse_dataset_csv("id,smiles,property,value\nm1,C/C,gap,1\nm2,CC,gap,abc\nm2,CC,gap,1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DatasetParse);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 1"), std::string::npos);
    EXPECT_NE(msg.find("row 2"), std::string::npos);
    EXPECT_NE(msg.find("row 3"), std::string::npos);
  }
  EXPECT_THROW(parse_dataset_csv("a,b\n"), Error);
}

TEST(Artifacts, ManifestAndLock) {
  TempDir dir("manifest");
  write_text(dir / "a.txt", "hello");
  Manifest m;
  m.tool_version = kToolVersion;
  m.record_output(dir.path(), "a.txt");
  EXPECT_EQ(m.outputs.at("a.txt"), sha256_hex("hello"));
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  m.save(dir.path());
  EXPECT_EQ(Manifest::load(dir.path()).to_json(), m.to_json());
  EXPECT_NO_THROW(m.verify(dir.path()));
  write_text(dir / "a.txt", "tampered");
  EXPECT_THROW(m.verify(dir.path()), Error);
  {
    RunLock lock(dir.path());
    try {
      RunLock again(dir.path());
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Locked);
    }
  }
  EXPECT_NO_THROW(RunLock(dir.path()));
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::BadConfig), 1);
  EXPECT_EQ(exit_code_for(ErrorKind::UnknownPolicy), 1);
  EXPECT_EQ(exit_code_for(ErrorKind::DatasetParse), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::InfeasibleQuota), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::NotEnoughClusters), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::HashMismatch), 4);
  EXPECT_EQ(exit_code_for(ErrorKind::Locked), 5);
  EXPECT_EQ(exit_code_for(ErrorKind::Io), 6);
}

namespace {

void toy_run(const fs::path& dir, const std::string& key, double mae) {
  fs::create_directories(dir);
  Manifest m;
  m.tool_version = kToolVersion;
  m.results_json = "{\"" + key + "\": {\"mean_mae\": " + std::to_string(mae) + "}}";
  m.save(dir);
}

}  // namespace

TEST(Report, DegradationFactor) {
  TempDir dir("report");
  toy_run(dir / "strict", "baseline_strict", 0.06);
  toy_run(dir / "random", "baseline_random", 0.02);
  std::ostringstream out;
  cmd_report({dir / "strict", dir / "random"}, out, dir / "r.csv");
  EXPECT_NE(out.str().find("Degradation factor (strict / random): 3.00x"), std::string::npos) << out.str();
  EXPECT_NE(read_file(dir / "r.csv").find("degradation_factor,strict/random,3.000000"), std::string::npos);

  std::ostringstream single;
  cmd_report({dir / "strict"}, single);
  EXPECT_NE(single.str().find("baseline_strict"), std::string::npos);
  EXPECT_EQ(single.str().find("Degradation"), std::string::npos);

  write_text(dir / "strict" / "extra.txt", "x");
  Manifest m = Manifest::load(dir / "strict");
  m.record_output(dir / "strict", "extra.txt");
  m.save(dir / "strict");
  write_text(dir / "strict" / "extra.txt", "y");
  try {
    cmd_report({dir / "strict"}, single);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::HashMismatch);
  }
}

class CliPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    cwd_ = fs::current_path();
    fs::current_path(dir_.path());
    write_text("tiny.json", kTinyConfig);
    fs::copy_file(oodmol::fixtures::source_path("data/planted.csv"), "planted.csv");
  }
  void TearDown() override { fs::current_path(cwd_); }

  TempDir dir_{"cli"};
  fs::path cwd_;
};

TEST_F(CliPipeline, EndToEndDeterministic) {
  std::string out;
  for (const char* run : {"r1", "r2"}) {
    const std::string common = std::string(" --config tiny.json --out ") + run;
    ASSERT_EQ(run_cli("bench build planted.csv" + common, &out), 0) << out;
    ASSERT_EQ(run_cli("train baseline" + common, &out), 0) << out;
    ASSERT_EQ(run_cli("train baseline --split random" + common, &out), 0) << out;
    ASSERT_EQ(run_cli("poma run --policy grpo" + common, &out), 0) << out;
    ASSERT_EQ(run_cli("poma run --policy graph-kernel" + common, &out), 0) << out;
    ASSERT_EQ(run_cli("poma run --policy grpo --ablation no-align" + common, &out), 0) << out;
  }
  EXPECT_NE(out.find("improvement"), std::string::npos) << out;
  for (const char* f : {"split.json", "tanimoto.csv", "w1.csv", "audit.txt", "baseline_strict.ckpt",
                        "baseline_random.ckpt", "baseline_strict_report.txt", "poma_grpo/report.txt",
                        "poma_grpo/policy.ckpt", "poma_grpo/rollouts.jsonl", "poma_graph-kernel/report.txt",
                        "poma_grpo_no-align/report.txt"}) {
    ASSERT_TRUE(fs::exists(fs::path("r1") / f)) << f;
    EXPECT_EQ(sha256_file(fs::path("r1") / f), sha256_file(fs::path("r2") / f)) << f;
  }
  EXPECT_EQ(run_cli("bench audit --config tiny.json --out r1", &out), 0) << out;
  ASSERT_EQ(run_cli("report r1 r2 --csv rep.csv", &out), 0) << out;
  EXPECT_NE(out.find("Degradation factor"), std::string::npos);
  EXPECT_TRUE(fs::exists("rep.csv"));
}

TEST_F(CliPipeline, ExitCodesPerErrorClass) {
  std::string out;
  EXPECT_EQ(run_cli("--version", &out), 0);
  EXPECT_NE(out.find("oodmol 0.3.0"), std::string::npos);
  EXPECT_NE(run_cli("no-such-command"), 0);

  write_text("bad.json", R"({"unknown": true})");
  EXPECT_EQ(run_cli("bench build planted.csv --config bad.json --out e1"), 1);

  write_text("bad.csv", "id,smiles,property,value\nm1,C/C=C/C,gap,1\n");
  EXPECT_EQ(run_cli("bench build bad.csv --config tiny.json --out e2"), 2);

  write_text("k.json", R"({"bench": {"k_total": 500, "task_threshold": 20}})");
  EXPECT_EQ(run_cli("bench build planted.csv --config k.json --out e3"), 3);

  ASSERT_EQ(run_cli("bench build planted.csv --config tiny.json --out e4", &out), 0) << out;
  {
    std::ofstream f("e4/split.json", std::ios::app);
    f << " ";
  }
  EXPECT_EQ(run_cli("train baseline --config tiny.json --out e4"), 4);

  ASSERT_EQ(run_cli("bench build planted.csv --config tiny.json --out e5", &out), 0) << out;
  {
    RunLock held("e5");
    EXPECT_EQ(run_cli("train baseline --config tiny.json --out e5"), 5);
  }
  EXPECT_EQ(run_cli("poma run --policy oracle --config tiny.json --out e5"), 1);
  // poma before baseline
  EXPECT_NE(run_cli("poma run --policy random --config tiny.json --out e5"), 0);

  // env var wins over --config
  ::setenv("OODMOL_CONFIG", "bad.json", 1);
  EXPECT_EQ(run_cli("bench build planted.csv --config tiny.json --out e6"), 1);
  ::unsetenv("OODMOL_CONFIG");
}
