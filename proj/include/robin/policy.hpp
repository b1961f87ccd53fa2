#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robin/estimation.hpp"
#include "robin/oracle.hpp"

namespace robin {

enum class PolicyKind { kUniform, kRobin, kRobinHood };

/// "uniform", "robin" or "robin-hood".
std::string_view policy_label(PolicyKind kind);
/// Accepts the labels above plus "robin_hood". Throws ConfigError otherwise.
PolicyKind parse_policy_kind(std::string_view text);

/// Known per-arm score variances for ROBIN.
///
/// Arms with variance 0 have share 0 and are never pulled; their estimate
/// stays 0 and Allocation::excluded marks them.
class VarianceProfile {
 public:
  /// Throws ConfigError if empty, if any entry is negative or not finite, or
  /// if every entry is 0.
  explicit VarianceProfile(std::vector<double> variances);

  std::size_t size() const noexcept { return variances_.size(); }
  const std::vector<double>& variances() const noexcept { return variances_; }
  double total() const noexcept { return total_; }
  /// sigma_i^2 / sum_j sigma_j^2
  double share(std::size_t arm) const { return variances_.at(arm) / total_; }

 private:
  std::vector<double> variances_;
  double total_ = 0.0;
};

struct WarmupMode {
  enum class Kind {
    kExperimental,  // max(2, ceil(4 ln(1/delta)))
    kTheory,        // ceil(16 ln(4KB/delta))
    kExplicit,
  };
  Kind kind = Kind::kExperimental;
  std::uint64_t length = 0;  // only for kExplicit

  static WarmupMode experimental() { return {Kind::kExperimental, 0}; }
  static WarmupMode theory() { return {Kind::kTheory, 0}; }
  static WarmupMode fixed(std::uint64_t n) { return {Kind::kExplicit, n}; }
};

/// Per-arm warm-up pulls t0. Throws ConfigError for an explicit length < 1.
std::uint64_t warmup_length(const ConfidenceConfig& cfg, const WarmupMode& mode);

/// Smallest budget B for which K arms can finish the warm-up, i.e.
/// B >= K * warmup_length(cfg with that B).
std::uint64_t minimum_feasible_budget(ConfidenceConfig cfg, const WarmupMode& mode);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kUniform;
  /// Required for kRobin.
  std::optional<VarianceProfile> variance_profile;
  /// Required for kRobinHood. num_arms and budget are overwritten with the
  /// oracle's arm count and the run's budget.
  std::optional<ConfidenceConfig> confidence;
  WarmupMode warmup;
  /// Name used in results; defaults to policy_label(kind).
  std::string label;

  std::string name() const { return label.empty() ? std::string(policy_label(kind)) : label; }
};

/// Final pull counts and score estimates.
struct Allocation {
  std::vector<std::uint64_t> pulls;
  std::vector<double> estimates;
  std::uint64_t budget = 0;
  std::string policy_name;
  /// Arms a ROBIN profile gave zero variance and therefore never pulled.
  std::vector<bool> excluded;

  friend bool operator==(const Allocation&, const Allocation&) = default;
};

/// Per-arm bounds floor(lambda_i B) and ceil(lambda_i B).
struct Quota {
  std::vector<std::uint64_t> lower;
  std::vector<std::uint64_t> upper;
};
Quota robin_quota(const VarianceProfile& profile, std::uint64_t budget);

/// argmax_i sigma_i^2 / n_i with x/0 = +inf (0 for zero-variance arms). Ties
/// go to fewer pulls, then the lower index. O(K).
///
/// With a budget, arms already at their upper quota are skipped, and once the
/// remaining queries are all needed to lift arms to their lower quota only
/// those arms compete. The plain greedy rule can end one pull below
/// floor(lambda_i B); the guard keeps every final count within the quota.
std::size_t select_arm_robin(const VarianceProfile& profile, std::span<const std::uint64_t> pulls,
                             std::optional<std::uint64_t> budget = std::nullopt);

/// argmax_i UCB_i / n_i. Ties as above. Throws StateError if some arm has not
/// been pulled yet. O(K).
std::size_t select_arm_robin_hood(std::span<const ArmState> states, const ConfidenceConfig& cfg);

/// Exact ROBIN pull counts for a budget, without sampling (the selection rule
/// never looks at scores).
std::vector<std::uint64_t> robin_pulls(const VarianceProfile& profile, std::uint64_t budget);

/// Sequential select/observe driver for one policy run.
///
/// Selection costs O(log K): only the observed arm's priority changes, so the
/// argmax is kept in a tournament tree. The choice matches select_arm_robin
/// (given the run budget) and select_arm_robin_hood exactly.
class Allocator {
 public:
  /// Throws ConfigError for missing/mismatched configuration and
  /// InfeasibleBudgetError when ROBIN-HOOD cannot finish its warm-up.
  Allocator(const PolicyConfig& cfg, std::size_t num_arms, std::uint64_t budget);

  /// Next arm to query. Throws StateError once the budget is spent.
  std::size_t select() const;
  /// Records the score of the arm that select() returned.
  void observe(std::size_t arm, double score);

  std::uint64_t step() const noexcept { return step_; }
  std::uint64_t budget() const noexcept { return budget_; }
  bool done() const noexcept { return step_ >= budget_; }
  /// Per-arm warm-up pulls (0 unless ROBIN-HOOD).
  std::uint64_t warmup() const noexcept { return warmup_; }
  std::span<const ArmState> states() const noexcept { return states_; }
  Allocation allocation() const;

 private:
  struct Key {
    double ratio;
    std::uint64_t pulls;
    std::size_t arm;
  };
  static bool beats(const Key& a, const Key& b);
  Key key_for(std::size_t arm) const;
  void refresh(std::size_t arm);
  void build_tree();

  PolicyKind kind_;
  std::string name_;
  std::size_t num_arms_;
  std::uint64_t budget_;
  std::uint64_t step_ = 0;
  std::uint64_t warmup_ = 0;
  std::optional<VarianceProfile> profile_;
  Quota quota_;
  std::uint64_t deficit_ = 0;
  bool forced_ = false;
  double confidence_log_ = 0.0;
  std::vector<ArmState> states_;
  std::size_t leaves_ = 0;
  std::vector<Key> tree_;
  bool tree_ready_ = false;
};

struct Checkpoint {
  std::uint64_t step = 0;
  /// Absent when the oracle has no ground truth.
  std::optional<double> wce;
  /// Some arm had not been pulled yet; its estimate counted as 0.
  bool partial = false;
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::optional<double> kendall;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Trajectory of one replication.
struct TrialRecord {
  std::string policy;
  std::uint64_t budget = 0;
  std::uint64_t replication = 0;
  std::uint64_t seed = 0;
  /// Strictly increasing steps; the last one equals budget.
  std::vector<Checkpoint> checkpoints;
  Allocation final_allocation;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct PolicyRun {
  Allocation allocation;
  TrialRecord record;
};

/// Checkpoints fall on multiples of checkpoint_every plus the final step;
/// checkpoint_every = 0 records the final step only.
std::vector<std::uint64_t> checkpoint_steps(std::uint64_t budget, std::uint64_t checkpoint_every);

/// Runs one policy for exactly `budget` oracle queries. Arm i draws from its
/// own stream keyed on (seed, i), so the run is a pure function of
/// (cfg, oracle, budget, seed). WCE uses the oracle's ground truth when it has
/// one; correlations use its human scores when present.
PolicyRun run_policy(const PolicyConfig& cfg, const JudgeOracle& oracle, std::uint64_t budget,
                     std::uint64_t seed, std::uint64_t checkpoint_every = 0);

}  // namespace robin
