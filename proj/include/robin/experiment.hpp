#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "robin/oracle.hpp"
#include "robin/policy.hpp"

namespace robin {

struct ExperimentConfig {
  /// A kRobin entry without a profile takes the oracle's ground-truth variances.
  std::vector<PolicyConfig> policies;
  std::vector<std::uint64_t> budgets;
  std::uint64_t replications = 1;
  std::uint64_t master_seed = 0;
  /// 0 records only the final step.
  std::uint64_t checkpoint_every = 0;
  /// Worker threads; results do not depend on it.
  unsigned jobs = 1;

  /// Throws ConfigError for empty policies/budgets, zero budgets or
  /// replications.
  void validate() const;
};

/// seed(cell, r) = derive_seed(master, policy index, budget index, r).
std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t policy_index,
                               std::size_t budget_index, std::uint64_t replication);

struct CellSummary {
  std::string policy;
  std::uint64_t budget = 0;
  /// WCE fields are absent when the oracle had no ground truth.
  std::optional<double> mean_wce;
  /// Sample standard deviation (divisor R-1); 0 when R = 1.
  std::optional<double> std_wce;
  std::optional<double> min_wce;
  std::optional<double> max_wce;
  std::uint64_t replications = 0;
  bool single_replication = false;

  friend bool operator==(const CellSummary&, const CellSummary&) = default;
};

/// Mean across replications at one checkpoint step.
struct CurvePoint {
  std::string policy;
  std::uint64_t budget = 0;
  std::uint64_t step = 0;
  std::optional<double> mean_wce;
  std::optional<double> mean_pearson;
  std::optional<double> mean_spearman;
  std::optional<double> mean_kendall;
};

struct AggregateReport {
  std::vector<CellSummary> cells;
  std::vector<CurvePoint> curves;

  /// Throws InputError if the cell is missing.
  const CellSummary& cell(const std::string& policy, std::uint64_t budget) const;
};

/// Mean and sample standard deviation of a nonempty list.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  bool single = false;
};
MeanStd mean_std(std::span<const double> values);

/// Groups records by (policy, budget) in first-seen order and summarises final
/// WCE. A mean (WCE or correlation) is present at a step only if every
/// replication has the value there. Throws InputError if a record lacks
/// checkpoints or replications of a cell disagree on their steps.
AggregateReport aggregate(std::span<const TrialRecord> records);

struct CellFailure {
  std::string policy;
  std::uint64_t budget = 0;
  std::string message;
  /// Set when the failure is an infeasible ROBIN-HOOD budget.
  std::optional<std::uint64_t> minimum_budget;
};

struct ExperimentResult {
  /// Canonical order: policy index, budget index, replication.
  std::vector<TrialRecord> records;
  AggregateReport report;
  std::vector<CellFailure> failures;
  /// Seed of each record, same order. Records completed before a cell failed
  /// are kept.
  std::vector<std::uint64_t> seeds;
};

/// Called once per finished replication (from worker threads, serialised).
using ProgressFn = std::function<void(const TrialRecord&)>;

/// Runs every (policy, budget) cell for cfg.replications seeded replications.
/// Throws ConfigError if ROBIN is requested on an oracle without ground truth.
/// Infeasible or failing cells are reported in `failures`; the other cells
/// still run.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const JudgeOracle& oracle,
                                const ProgressFn& progress = {});

}  // namespace robin
