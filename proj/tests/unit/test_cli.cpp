#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;
using sumformer::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "sumformer");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sumformer_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string out(const std::string& sub = "") const { return (dir_ / sub).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, VerifyDefaultPasses) {
  const Result r = invoke({"verify", "--out", out()});
  EXPECT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(slurp(dir_ / "verify_report.json"));
  EXPECT_TRUE(j["passed"].get<bool>());
  for (const auto& p : j["properties"]) {
    EXPECT_EQ(p["status"], "pass") << p["name"];
    EXPECT_TRUE(p.contains("max_residual"));
    EXPECT_TRUE(p["witness_path"].is_null());
  }
}

TEST_F(CliTest, VerifyLiteralLinformerFails) {
  const Result r = invoke({"verify", "--out", out(), "--n", "4", "--linformer-scale", "sequence_length"});
  EXPECT_EQ(r.code, sumformer::cli::kVerificationFailed);
  EXPECT_NE(r.out.find("FAIL sigma_recovery_linformer"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(dir_ / "verify_report.json"));
  bool seen = false;
  for (const auto& p : j["properties"]) {
    if (p["name"] != "sigma_recovery_linformer") continue;
    seen = true;
    EXPECT_EQ(p["status"], "fail");
    EXPECT_GE(p["max_residual"].get<double>(), 1e-2);
    EXPECT_TRUE(fs::exists(dir_ / p["witness_path"].get<std::string>()));
  }
  EXPECT_TRUE(seen);
}

TEST_F(CliTest, VerifyZeroToleranceFails) {
  EXPECT_EQ(invoke({"verify", "--out", out(), "--tol", "0"}).code, sumformer::cli::kVerificationFailed);
}

TEST_F(CliTest, TrainZeroEpochs) {
  const Result r = invoke({"train", "--out", out(), "--epochs", "0", "--points", "50"});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(dir_ / "train_curve.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "epoch,split,metric,value");
  EXPECT_EQ(rows[1].rfind("0,validation,relative_l2,", 0), 0u);
  EXPECT_TRUE(fs::exists(dir_ / "model.json"));
  const auto m = nlohmann::json::parse(slurp(dir_ / "run_manifest.json"));
  EXPECT_EQ(m["config"]["epochs"], 0);
  EXPECT_EQ(m["target"]["name"], "cubic_interaction");
}

TEST_F(CliTest, TrainIsDeterministic) {
  const std::vector<std::string> args{"train", "--epochs", "6", "--points", "60", "--seed", "4"};
  auto a = args, b = args;
  a.insert(a.end(), {"--out", out("a")});
  b.insert(b.end(), {"--out", out("b")});
  ASSERT_EQ(invoke(a).code, 0);
  ASSERT_EQ(invoke(b).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "train_curve.csv"), slurp(dir_ / "b" / "train_curve.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "model.json"), slurp(dir_ / "b" / "model.json"));
  ASSERT_EQ(invoke(a).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "train_curve.csv"), slurp(dir_ / "b" / "train_curve.csv"));
}

TEST_F(CliTest, TrainCurveCadence) {
  ASSERT_EQ(invoke({"train", "--out", out(), "--epochs", "200", "--points", "20", "--d-latent", "2"}).code, 0);
  // Header plus epochs 0, 5, ..., 200.
  EXPECT_EQ(lines(slurp(dir_ / "train_curve.csv")).size(), 42u);
}

TEST_F(CliTest, TrainDivergenceExitCode) {
  const Result r = invoke({"train", "--out", out(), "--epochs", "5", "--points", "40", "--lr", "1e300"});
  EXPECT_EQ(r.code, sumformer::cli::kDiverged);
  EXPECT_TRUE(fs::exists(dir_ / "train_curve.csv"));
}

TEST_F(CliTest, SweepSingleCell) {
  ASSERT_EQ(invoke({"sweep", "--out", out(), "--epochs", "1", "--points", "20", "--d-list", "2",
                    "--dprime-list", "4"})
                .code,
            0);
  const auto rows = lines(slurp(dir_ / "sweep.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "d,d_prime,seed,best_val_err,dprime_formula");
}

TEST_F(CliTest, SweepGridAndFormulaColumn) {
  ASSERT_EQ(invoke({"sweep", "--out", out(), "--epochs", "1", "--points", "20", "--d-list", "1,2",
                    "--dprime-list", "2,8,32", "--seeds", "2"})
                .code,
            0);
  const auto rows = lines(slurp(dir_ / "sweep.csv"));
  ASSERT_EQ(rows.size(), 1u + 6 * 2);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const std::string formula = rows[i].substr(rows[i].rfind(',') + 1);
    EXPECT_EQ(formula, rows[i][0] == '1' ? "3" : "9") << rows[i];
  }
}

TEST_F(CliTest, BenchRatios) {
  ASSERT_EQ(invoke({"bench", "--out", out(), "--k", "8"}).code, 0);
  const auto rows = lines(slurp(dir_ / "bench.csv"));
  ASSERT_EQ(rows.size(), 1u + 3 * 4);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<std::string> f;
    std::istringstream is(rows[i]);
    for (std::string c; std::getline(is, c, ',');) f.push_back(c);
    EXPECT_EQ(f[4], f[5]) << "formula vs counted: " << rows[i];
    if (f.size() < 7 || f[6].empty()) continue;
    const double ratio = std::stod(f[6]);
    if (f[0] == "standard") {
      EXPECT_GE(ratio, 3.6);
      EXPECT_LE(ratio, 4.4);
    } else {
      EXPECT_GE(ratio, 1.8);
      EXPECT_LE(ratio, 2.2);
    }
  }
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  fs::create_directories(dir_);
  std::ofstream(dir_ / "run.toml") << "n = 5\nk = 3\ntrials = 4\n";
  const Result r = invoke({"--config", (dir_ / "run.toml").string(), "verify", "--out", out("o"), "--k", "4"});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir_ / "o" / "verify_report.json"));
  EXPECT_EQ(j["config"]["n"], 5);
  EXPECT_EQ(j["config"]["k"], 4);
  EXPECT_EQ(j["config"]["trials"], 4);
}

TEST_F(CliTest, ConfigErrorsWriteNothing) {
  fs::create_directories(dir_);
  std::ofstream(dir_ / "bad.toml") << "n = 5\nbogus = 1\n";
  const std::vector<std::vector<std::string>> cases{
      {"--config", (dir_ / "bad.toml").string(), "verify", "--out", out("x")},
      {"verify", "--out", out("x"), "--n", "0"},
      {"verify", "--out", out("x"), "--n", "3", "--k", "3"},
      {"train", "--out", out("x"), "--target", "nope"},
      {"bench", "--out", out("x"), "--variant", "sparse"},
      {"sweep", "--out", out("x"), "--dprime-list", "0"},
      {"train", "--out", out("x"), "--unknown-flag"},
      {"--out", out("x")},
  };
  for (const auto& c : cases) {
    const Result r = invoke(c);
    EXPECT_EQ(r.code, sumformer::cli::kConfigError) << c[0] << " " << r.err;
    EXPECT_FALSE(fs::exists(dir_ / "x"));
  }
}

TEST_F(CliTest, Help) {
  const Result r = invoke({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("verify"), std::string::npos);
}
