#include "robin/experiment.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "robin/errors.hpp"

namespace robin {
namespace {

TrialRecord record(const std::string& policy, std::uint64_t budget, std::uint64_t rep,
                   std::vector<std::pair<std::uint64_t, double>> points) {
  TrialRecord r;
  r.policy = policy;
  r.budget = budget;
  r.replication = rep;
  for (auto [step, w] : points) {
    Checkpoint c;
    c.step = step;
    c.wce = w;
    r.checkpoints.push_back(c);
  }
  return r;
}

PolicyConfig make(PolicyKind kind) {
  PolicyConfig c;
  c.kind = kind;
  if (kind == PolicyKind::kRobinHood) {
    ConfidenceConfig conf;
    conf.delta = 0.05;
    conf.log_kind = ConfidenceLog::kSingleCheck;
    c.confidence = conf;
  }
  return c;
}

SyntheticOracle heterogeneous(std::size_t k, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<SyntheticArmSpec> arms;
  for (std::size_t i = 0; i < k; ++i) {
    arms.push_back({2.0 * rng.uniform01(), 0.1 + 3.9 * rng.uniform01(), NoiseKind::kGaussian});
  }
  return SyntheticOracle(arms);
}

TEST(MeanStd, Examples) {
  const std::vector<double> two{0.2, 0.4};
  const auto m = mean_std(two);
  EXPECT_NEAR(m.mean, 0.3, 1e-15);
  EXPECT_NEAR(m.std, 0.14142135623730953, 1e-15);
  EXPECT_FALSE(m.single);
  const std::vector<double> one{0.7};
  const auto s = mean_std(one);
  EXPECT_EQ(s.mean, 0.7);
  EXPECT_EQ(s.std, 0.0);
  EXPECT_TRUE(s.single);
  EXPECT_THROW(mean_std(std::vector<double>{}), InputError);
}

TEST(MeanStd, MatchesTwoPass) {
  RandomStream rng(17);
  std::vector<double> xs(50);
  for (auto& x : xs) x = 5.0 + rng.normal();
  const auto m = mean_std(xs);
  const auto b = testing::batch_moments(xs);
  EXPECT_NEAR(m.mean, b.mean, 1e-12);
  EXPECT_NEAR(m.std, std::sqrt(b.unbiased_variance), 1e-12);
}

TEST(Aggregate, CellsAndCurves) {
  const std::vector<TrialRecord> recs{
      record("uniform", 10, 0, {{5, 1.0}, {10, 0.2}}),
      record("uniform", 10, 1, {{5, 3.0}, {10, 0.4}}),
      record("robin", 10, 0, {{5, 0.5}, {10, 0.1}}),
  };
  const auto rep = aggregate(recs);
  ASSERT_EQ(rep.cells.size(), 2u);
  EXPECT_EQ(rep.cells[0].policy, "uniform");
  const auto& u = rep.cell("uniform", 10);
  EXPECT_NEAR(*u.mean_wce, 0.3, 1e-15);
  EXPECT_NEAR(*u.std_wce, 0.14142135623730953, 1e-15);
  EXPECT_EQ(*u.min_wce, 0.2);
  EXPECT_EQ(*u.max_wce, 0.4);
  EXPECT_EQ(u.replications, 2u);
  const auto& r = rep.cell("robin", 10);
  EXPECT_TRUE(r.single_replication);
  EXPECT_EQ(*r.std_wce, 0.0);
  EXPECT_THROW(rep.cell("robin", 11), InputError);
  ASSERT_EQ(rep.curves.size(), 4u);
  EXPECT_EQ(rep.curves[0].step, 5u);
  EXPECT_NEAR(*rep.curves[0].mean_wce, 2.0, 1e-15);
  EXPECT_FALSE(rep.curves[0].mean_pearson.has_value());
}

TEST(Aggregate, MismatchedStepsRejected) {
  const std::vector<TrialRecord> recs{record("u", 10, 0, {{5, 1.0}, {10, 0.2}}),
                                      record("u", 10, 1, {{10, 0.4}})};
  EXPECT_THROW(aggregate(recs), InputError);
  EXPECT_THROW(aggregate(std::vector<TrialRecord>{record("u", 10, 0, {})}), InputError);
}

TEST(ExperimentConfig, Validation) {
  ExperimentConfig c;
  EXPECT_THROW(c.validate(), ConfigError);
  c.policies = {make(PolicyKind::kUniform)};
  EXPECT_THROW(c.validate(), ConfigError);
  c.budgets = {10};
  c.validate();
  c.replications = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.replications = 1;
  c.budgets = {0};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunExperiment, ZeroVarianceUniformIsExactAfterOneRound) {
  const SyntheticOracle o({{1.0, 0.0}, {2.0, 0.0}, {3.0, 0.0}});
  ExperimentConfig c;
  c.policies = {make(PolicyKind::kUniform)};
  c.budgets = {9};
  c.replications = 3;
  c.checkpoint_every = 1;
  const auto res = run_experiment(c, o);
  ASSERT_EQ(res.records.size(), 3u);
  for (const auto& r : res.records) {
    for (const auto& cp : r.checkpoints) {
      if (cp.step >= 3) EXPECT_EQ(*cp.wce, 0.0);
    }
  }
}

TEST(RunExperiment, SeedsAndOrder) {
  const auto o = heterogeneous(5, 1);
  ExperimentConfig c;
  c.policies = {make(PolicyKind::kUniform), make(PolicyKind::kRobin)};
  c.budgets = {100, 200};
  c.replications = 3;
  c.master_seed = 9;
  const auto res = run_experiment(c, o);
  ASSERT_EQ(res.records.size(), 12u);
  std::size_t t = 0;
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::uint64_t r = 0; r < 3; ++r, ++t) {
        EXPECT_EQ(res.records[t].policy, p == 0 ? "uniform" : "robin");
        EXPECT_EQ(res.records[t].budget, c.budgets[b]);
        EXPECT_EQ(res.records[t].replication, r);
        EXPECT_EQ(res.seeds[t], replication_seed(9, p, b, r));
        EXPECT_EQ(res.records[t].seed, res.seeds[t]);
      }
    }
  }
  EXPECT_NE(replication_seed(9, 0, 0, 0), replication_seed(9, 0, 0, 1));
  EXPECT_NE(replication_seed(9, 0, 0, 0), replication_seed(10, 0, 0, 0));
}

TEST(RunExperiment, DeterministicAcrossJobCounts) {
  const auto o = heterogeneous(8, 2);
  ExperimentConfig c;
  c.policies = {make(PolicyKind::kUniform), make(PolicyKind::kRobin), make(PolicyKind::kRobinHood)};
  c.budgets = {400, 800};
  c.replications = 5;
  c.master_seed = 3;
  c.checkpoint_every = 100;
  const auto a = run_experiment(c, o);
  const auto b = run_experiment(c, o);
  c.jobs = 4;
  const auto d = run_experiment(c, o);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.records, d.records);
  EXPECT_EQ(a.report.cells, d.report.cells);
}

TEST(RunExperiment, ProgressCalledPerReplication) {
  const auto o = heterogeneous(3, 2);
  ExperimentConfig c;
  c.policies = {make(PolicyKind::kUniform)};
  c.budgets = {30, 60};
  c.replications = 4;
  c.jobs = 3;
  int calls = 0;
  run_experiment(c, o, [&](const TrialRecord&) { ++calls; });
  EXPECT_EQ(calls, 8);
}

TEST(RunExperiment, RobinBeatsUniformOnHeterogeneousArms) {
  const auto o = heterogeneous(20, 5);
  ExperimentConfig c;
  c.policies = {make(PolicyKind::kUniform), make(PolicyKind::kRobin)};
  c.budgets = {20000};
  c.replications = 50;
  c.master_seed = 1;
  const auto res = run_experiment(c, o);
  EXPECT_LT(*res.report.cell("robin", 20000).mean_wce, *res.report.cell("uniform", 20000).mean_wce);
}

TEST(RunExperiment, LargerBudgetsHelp) {
  const auto o = heterogeneous(10, 6);
  ExperimentConfig c;
  c.policies = {make(PolicyKind::kUniform), make(PolicyKind::kRobin), make(PolicyKind::kRobinHood)};
  c.budgets = {1000, 4000, 16000};
  c.replications = 40;
  const auto res = run_experiment(c, o);
  for (const char* p : {"uniform", "robin", "robin-hood"}) {
    EXPECT_GT(*res.report.cell(p, 1000).mean_wce, *res.report.cell(p, 4000).mean_wce) << p;
    EXPECT_GT(*res.report.cell(p, 4000).mean_wce, *res.report.cell(p, 16000).mean_wce) << p;
  }
}

TEST(RunExperiment, RobinNeedsGroundTruth) {
  class NoTruth final : public JudgeOracle {
   public:
    std::size_t num_arms() const override { return 2; }
    double sample(std::size_t, RandomStream& s) const override { return s.uniform01(); }
    bool has_ground_truth() const override { return false; }
    GroundTruth ground_truth() const override { throw UnsupportedError("none"); }
    std::string kind() const override { return "none"; }
  } oracle;
  ExperimentConfig c;
  c.policies = {make(PolicyKind::kRobin)};
  c.budgets = {10};
  EXPECT_THROW(run_experiment(c, oracle), ConfigError);
  c.policies = {make(PolicyKind::kUniform)};
  const auto res = run_experiment(c, oracle);
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_FALSE(res.records[0].checkpoints.back().wce.has_value());
  EXPECT_FALSE(res.report.cells[0].mean_wce.has_value());
}

TEST(RunExperiment, InfeasibleCellIsReportedOthersRun) {
  const auto o = heterogeneous(4, 7);
  ExperimentConfig c;
  c.policies = {make(PolicyKind::kUniform), make(PolicyKind::kRobinHood)};
  c.budgets = {10, 400};
  c.replications = 2;
  const auto res = run_experiment(c, o);
  ASSERT_EQ(res.failures.size(), 1u);
  EXPECT_EQ(res.failures[0].policy, "robin-hood");
  EXPECT_EQ(res.failures[0].budget, 10u);
  ASSERT_TRUE(res.failures[0].minimum_budget.has_value());
  // ceil(4 ln 20) = 12 pulls on each of 4 arms.
  EXPECT_EQ(*res.failures[0].minimum_budget, 48u);
  EXPECT_EQ(res.records.size(), 6u);
  EXPECT_EQ(res.report.cells.size(), 3u);
}

}  // namespace
}  // namespace robin
