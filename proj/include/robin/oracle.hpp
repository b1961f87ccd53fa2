#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "robin/rng.hpp"

namespace robin {

/// A fixed pool of judge scores for one prompt-response pair. Replay oracles
/// treat the pool as the population, so its moments are the ground truth.
class ScorePool {
 public:
  /// Validates that samples are nonempty, finite and inside [0, score_max].
  ScorePool(std::string pair_id, std::vector<double> samples, std::optional<double> human_score,
            double score_max);

  const std::string& pair_id() const noexcept { return pair_id_; }
  const std::vector<double>& samples() const noexcept { return samples_; }
  const std::optional<double>& human_score() const noexcept { return human_score_; }
  double mean() const noexcept { return mean_; }
  /// Biased (population) variance of the pool.
  double variance() const noexcept { return variance_; }

  friend bool operator==(const ScorePool& a, const ScorePool& b) {
    return a.pair_id_ == b.pair_id_ && a.samples_ == b.samples_ && a.human_score_ == b.human_score_;
  }

 private:
  std::string pair_id_;
  std::vector<double> samples_;
  std::optional<double> human_score_;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

enum class NoiseKind { kGaussian, kTruncatedGaussian, kUniform };

/// One synthetic arm. For kGaussian and kUniform, mean/variance are the exact
/// moments of the score. For kTruncatedGaussian they parameterise the parent
/// normal, which is then restricted to [lower, upper]; the ground truth
/// reports the truncated moments. kUniform draws from
/// [mean - sqrt(3 variance), mean + sqrt(3 variance)], which must fit inside
/// [lower, upper].
struct SyntheticArmSpec {
  double mean = 0.0;
  double variance = 0.0;
  NoiseKind noise = NoiseKind::kGaussian;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  void validate() const;
  double exact_mean() const;
  double exact_variance() const;
  double draw(RandomStream& stream) const;
};

struct GroundTruth {
  std::vector<double> means;
  std::vector<double> variances;
};

/// Source of noisy judge scores. Sampling is deterministic given the caller's
/// stream; implementations are safe to share across threads.
class JudgeOracle {
 public:
  virtual ~JudgeOracle() = default;

  virtual std::size_t num_arms() const = 0;
  /// Throws InputError when arm >= num_arms().
  virtual double sample(std::size_t arm, RandomStream& stream) const = 0;
  virtual bool has_ground_truth() const { return true; }
  /// Throws UnsupportedError for oracles without a known truth.
  virtual GroundTruth ground_truth() const = 0;
  /// Present only when every arm carries a human rating.
  virtual std::optional<std::vector<double>> human_scores() const { return std::nullopt; }
  virtual std::string kind() const = 0;

 protected:
  void check_arm(std::size_t arm) const;
};

/// Replays pooled scores uniformly with replacement.
class ReplayOracle final : public JudgeOracle {
 public:
  explicit ReplayOracle(std::vector<ScorePool> pools);

  std::size_t num_arms() const override { return pools_.size(); }
  double sample(std::size_t arm, RandomStream& stream) const override;
  GroundTruth ground_truth() const override;
  std::optional<std::vector<double>> human_scores() const override;
  std::string kind() const override { return "replay"; }

  const std::vector<ScorePool>& pools() const noexcept { return pools_; }

 private:
  std::vector<ScorePool> pools_;
};

class SyntheticOracle final : public JudgeOracle {
 public:
  explicit SyntheticOracle(std::vector<SyntheticArmSpec> arms);

  std::size_t num_arms() const override { return arms_.size(); }
  double sample(std::size_t arm, RandomStream& stream) const override;
  GroundTruth ground_truth() const override;
  std::string kind() const override { return "synthetic"; }

  const std::vector<SyntheticArmSpec>& arms() const noexcept { return arms_; }

 private:
  std::vector<SyntheticArmSpec> arms_;
};

/// What the remote judge is asked to grade.
struct PairPayload {
  std::string pair_id;
  std::string prompt;
  std::string response;
  std::string rubric;
};

struct RemoteJudgeConfig {
  /// Base URL, e.g. "http://127.0.0.1:8080" or "http://host/api". Requests go
  /// to <endpoint>/judge.
  std::string endpoint;
  double score_max = 4.0;
  std::chrono::milliseconds timeout{10000};
  /// Attempts after the first one.
  int max_retries = 3;
  std::chrono::milliseconds backoff{100};
};

/// One judge query over HTTP. Connection failures and 5xx/429 replies are
/// retried with exponential backoff; anything else is final.
/// Throws QueryError once retries are exhausted and ProtocolError for a reply
/// without a numeric "score" in [0, score_max].
double remote_judge_sample(const RemoteJudgeConfig& cfg, const PairPayload& payload);

/// Oracle backed by a remote judge. The judge's own randomness replaces the
/// caller's stream; there is no ground truth.
class RemoteJudgeOracle final : public JudgeOracle {
 public:
  RemoteJudgeOracle(RemoteJudgeConfig cfg, std::vector<PairPayload> pairs);

  std::size_t num_arms() const override { return pairs_.size(); }
  double sample(std::size_t arm, RandomStream& stream) const override;
  bool has_ground_truth() const override { return false; }
  GroundTruth ground_truth() const override;
  std::string kind() const override { return "remote"; }

 private:
  RemoteJudgeConfig cfg_;
  std::vector<PairPayload> pairs_;
};

}  // namespace robin
