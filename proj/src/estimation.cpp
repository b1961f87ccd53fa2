#include "robin/estimation.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "robin/errors.hpp"

namespace robin {

void ConfidenceConfig::validate() const {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw ConfigError("delta must lie in (0, 1], got " + std::to_string(delta));
  }
  if (num_arms < 1) throw ConfigError("num_arms must be at least 1");
  if (budget < 1) throw ConfigError("budget must be at least 1");
}

double ConfidenceConfig::confidence_log() const {
  validate();
  switch (log_kind) {
    case ConfidenceLog::kUnionBound:
      return std::log(4.0 * static_cast<double>(num_arms) * static_cast<double>(budget) / delta);
    case ConfidenceLog::kSingleCheck:
      return std::log(1.0 / delta);
  }
  return 0.0;
}

ArmState update(ArmState state, double x) {
  if (!std::isfinite(x)) throw InputError("score must be finite");
  state.pulls += 1;
  const double delta = x - state.mean;
  state.mean += delta / static_cast<double>(state.pulls);
  state.m2 += delta * (x - state.mean);
  if (state.m2 < 0.0) state.m2 = 0.0;
  return state;
}

ArmState update(ArmState state, std::span<const double> xs) {
  for (double x : xs) state = update(state, x);
  return state;
}

double biased_variance(const ArmState& state) {
  if (state.pulls == 0) throw StateError("variance of an arm with no pulls is undefined");
  return state.m2 / static_cast<double>(state.pulls);
}

double unbiased_variance(const ArmState& state) {
  if (state.pulls < 2) throw StateError("unbiased variance needs at least two pulls");
  return state.m2 / static_cast<double>(state.pulls - 1);
}

double ucb_variance(double variance, std::uint64_t pulls, double confidence_log) {
  if (pulls == 0) throw StateError("UCB of an arm with no pulls is undefined");
  const double denom = 1.0 - std::sqrt(4.0 * confidence_log / static_cast<double>(pulls));
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return variance / denom;
}

double ucb_variance(const ArmState& state, const ConfidenceConfig& cfg) {
  return ucb_variance(biased_variance(state), state.pulls, cfg.confidence_log());
}

}  // namespace robin
