#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace robin {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "robin-alloc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("robin_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "spec.json") << R"({"score_range_max": 4,
      "random": {"num_arms": 6, "seed": 1, "mean_range": [1, 3], "variance_range": [0.1, 1]}})";
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string dataset(bool human) {
    std::vector<std::string> args{"gen-synthetic", "--spec", path("spec.json"),
                                  "--samples-per-arm", "20", "--seed", "2",
                                  "--out", path(human ? "h.jsonl" : "d.jsonl")};
    if (human) {
      args.push_back("--human-noise");
      args.push_back("0.2");
    }
    EXPECT_EQ(invoke(args).code, cli::kOk);
    return path(human ? "h.jsonl" : "d.jsonl");
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(invoke({}).code, cli::kUsage);
  EXPECT_EQ(invoke({"bogus"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"simulate", "--dataset", dataset(false), "--budget", "100"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"simulate", "--budget", "100", "--out", path("o")}).code, cli::kUsage);
  EXPECT_EQ(invoke({"simulate", "--dataset", dataset(false), "--synthetic", path("spec.json"),
                    "--budget", "100", "--out", path("o")})
                .code,
            cli::kUsage);
  EXPECT_EQ(invoke({"simulate", "--dataset", dataset(false), "--budget", "100", "--warmup", "soon",
                    "--out", path("o")})
                .code,
            cli::kUsage);
  EXPECT_EQ(invoke({"allocate", "--variances", "1,2"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"--help"}).code, cli::kOk);
}

TEST_F(CliTest, Allocate) {
  const auto r = invoke({"allocate", "--variances", "1,3", "--budget", "4"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(r.out, "arm,variance,share,pulls\n0,1,0.25,1\n1,3,0.75,3\n");
  std::ofstream(path("v.txt")) << "1\n1\n4\n";
  const auto f = invoke({"allocate", "--variances", path("v.txt"), "--budget", "3"});
  ASSERT_EQ(f.code, cli::kOk) << f.err;
  EXPECT_NE(f.out.find("2,4,0.66666666666666663,2\n"), std::string::npos) << f.out;
  EXPECT_EQ(invoke({"allocate", "--variances", "0,0", "--budget", "3"}).code, cli::kInfeasible);
}

TEST_F(CliTest, SimulateIsDeterministicAcrossJobs) {
  const auto d = dataset(false);
  for (const char* jobs : {"1", "4"}) {
    for (const char* run : {"a", "b"}) {
      const auto r = invoke({"simulate", "--dataset", d, "--policy", "all", "--budget", "200,400",
                             "--replications", "3", "--seed", "5", "--checkpoint-every", "50",
                             "--jobs", jobs, "--out", path(std::string(run) + jobs)});
      ASSERT_EQ(r.code, cli::kOk) << r.err;
    }
  }
  for (const char* f : {"trajectories.csv", "summary.csv", "allocations.csv", "manifest.json"}) {
    const auto ref = slurp(dir_ / "a1" / f);
    EXPECT_FALSE(ref.empty()) << f;
    EXPECT_EQ(ref, slurp(dir_ / "b1" / f)) << f;
    EXPECT_EQ(ref, slurp(dir_ / "a4" / f)) << f;
    EXPECT_EQ(ref, slurp(dir_ / "b4" / f)) << f;
  }
}

TEST_F(CliTest, InfeasibleRobinHoodBudgetExits2) {
  const auto r = invoke({"simulate", "--dataset", dataset(false), "--policy", "robin-hood",
                         "--budget", "50", "--out", path("o")});
  EXPECT_EQ(r.code, cli::kInfeasible);
  // 6 arms x ceil(4 ln(1/0.007)) = 6 x 20
  EXPECT_NE(r.err.find("120"), std::string::npos) << r.err;
}

TEST_F(CliTest, SimulateFromSyntheticSpec) {
  const auto r = invoke({"simulate", "--synthetic", path("spec.json"), "--policy", "robin",
                         "--budget", "300", "--out", path("o")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "o" / "summary.csv"));
}

TEST_F(CliTest, AnalyzeTwoPolicies) {
  ASSERT_EQ(invoke({"simulate", "--dataset", dataset(false), "--policy", "uniform", "--policy",
                    "robin", "--budget", "300", "--replications", "2", "--out", path("o")})
                .code,
            cli::kOk);
  const auto r = invoke({"analyze", "--results", path("o"), "--curves", path("c.csv")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) {
    if (line.rfind("uniform", 0) == 0 || line.rfind("robin", 0) == 0) rows.push_back(line);
  }
  EXPECT_EQ(rows.size(), 2u) << r.out;
  EXPECT_NE(r.out.find("absent"), std::string::npos);
  EXPECT_EQ(slurp(path("c.csv")).substr(0, 14), "policy,budget,");
}

TEST_F(CliTest, AnalyzeReportsCorrelationsWithHumanScores) {
  const auto d = dataset(true);
  ASSERT_EQ(invoke({"simulate", "--dataset", d, "--policy", "robin", "--budget", "300", "--out",
                    path("o")})
                .code,
            cli::kOk);
  const auto r = invoke({"analyze", "--results", path("o"), "--dataset", d});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(r.out.find("absent"), std::string::npos) << r.out;
}

TEST_F(CliTest, AnalyzeDetectsTamperedSummary) {
  ASSERT_EQ(invoke({"simulate", "--dataset", dataset(false), "--policy", "uniform", "--budget",
                    "300", "--replications", "2", "--out", path("o")})
                .code,
            cli::kOk);
  EXPECT_EQ(invoke({"analyze", "--results", path("o")}).code, cli::kOk);
  auto summary = slurp(dir_ / "o" / "summary.csv");
  const auto row = summary.find("uniform,300,");
  ASSERT_NE(row, std::string::npos);
  summary.replace(row + 12, 1, summary[row + 12] == '9' ? "1" : "9");
  std::ofstream(dir_ / "o" / "summary.csv", std::ios::binary) << summary;
  EXPECT_EQ(invoke({"analyze", "--results", path("o")}).code, cli::kRuntime);
}

TEST_F(CliTest, MissingResultsIsRuntimeError) {
  EXPECT_NE(invoke({"analyze", "--results", path("none")}).code, cli::kOk);
}

}  // namespace
}  // namespace robin
