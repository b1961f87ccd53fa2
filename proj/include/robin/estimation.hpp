#pragma once

#include <cstdint>
#include <span>

namespace robin {

/// Online sufficient statistics for one arm: pull count, running mean and the
/// running sum of squared deviations (Welford).
///
/// An arm with no pulls has mean 0 and m2 0.
struct ArmState {
  std::uint64_t pulls = 0;
  double mean = 0.0;
  double m2 = 0.0;

  friend bool operator==(const ArmState&, const ArmState&) = default;
};

/// Which logarithm sets the width of the variance confidence radius.
enum class ConfidenceLog {
  /// log(4KB/delta): union bound over every arm and every round.
  kUnionBound,
  /// log(1/delta): a single-check radius. Pairs with the experimental warm-up
  /// t0 = 4 ln(1/delta), which is exactly what makes its denominator positive.
  kSingleCheck,
};

/// Confidence parameters for the UCB variance estimate.
struct ConfidenceConfig {
  double delta = 0.05;
  std::uint64_t num_arms = 1;
  std::uint64_t budget = 1;
  ConfidenceLog log_kind = ConfidenceLog::kUnionBound;

  /// Throws ConfigError unless delta in (0,1], num_arms >= 1, budget >= 1.
  void validate() const;

  /// The log term used in the radius, natural log.
  double confidence_log() const;
};

/// Adds one score. Throws InputError if x is not finite.
ArmState update(ArmState state, double x);

/// Adds every score in order.
ArmState update(ArmState state, std::span<const double> xs);

/// m2 / pulls. Throws StateError if the arm was never pulled.
double biased_variance(const ArmState& state);

/// m2 / (pulls - 1). Throws StateError if pulls < 2.
double unbiased_variance(const ArmState& state);

/// Optimistic variance bound sigma^2 / (1 - sqrt(4 L / n)) where L is
/// cfg.confidence_log(). Returns +infinity when the denominator is not
/// positive. Throws StateError if the arm was never pulled.
double ucb_variance(const ArmState& state, const ConfidenceConfig& cfg);

/// Same bound from raw pieces; exposed for tests and the allocator.
double ucb_variance(double variance, std::uint64_t pulls, double confidence_log);

}  // namespace robin
