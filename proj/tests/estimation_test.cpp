#include "robin/estimation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "robin/errors.hpp"
#include "robin/rng.hpp"

namespace robin {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ArmState feed(std::vector<double> xs) { return update(ArmState{}, xs); }

// A ConfidenceConfig whose union-bound log term is exactly `log_term`.
ConfidenceConfig with_log_term(double log_term) {
  ConfidenceConfig c;
  c.num_arms = 1;
  c.budget = 1;
  c.delta = 4.0 * std::exp(-log_term);
  return c;
}

TEST(ArmState, EmptyByConvention) {
  ArmState s;
  EXPECT_EQ(s.pulls, 0u);
  EXPECT_EQ(s.mean, 0.0);
  EXPECT_EQ(s.m2, 0.0);
  EXPECT_THROW(biased_variance(s), StateError);
  EXPECT_THROW(ucb_variance(s, ConfidenceConfig{}), StateError);
}

TEST(Update, ThreeSamples) {
  const ArmState s = feed({1, 2, 3});
  EXPECT_EQ(s.pulls, 3u);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_NEAR(biased_variance(s), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(unbiased_variance(s), 1.0, 1e-15);
}

TEST(Update, SingleSample) {
  const ArmState s = feed({5});
  EXPECT_EQ(s.pulls, 1u);
  EXPECT_EQ(s.mean, 5.0);
  EXPECT_EQ(s.m2, 0.0);
  EXPECT_THROW(unbiased_variance(s), StateError);
}

TEST(Update, RejectsNonFinite) {
  EXPECT_THROW(update(ArmState{}, std::nan("")), InputError);
  EXPECT_THROW(update(ArmState{}, kInf), InputError);
}

TEST(BiasedVariance, Examples) {
  EXPECT_EQ(biased_variance(feed({2.5, 2.5, 2.5, 2.5})), 0.0);
  EXPECT_DOUBLE_EQ(biased_variance(feed({0, 4})), 4.0);
}

TEST(Update, MatchesTwoPassOnLongStream) {
  RandomStream rng(20240601);
  std::vector<double> xs(10000);
  for (auto& x : xs) x = 3.0 + 0.7 * rng.normal();
  const ArmState s = feed(xs);
  const auto ref = testing::batch_moments(xs);
  EXPECT_NEAR(s.mean, ref.mean, 1e-9 * std::abs(ref.mean));
  EXPECT_NEAR(biased_variance(s), ref.biased_variance, 1e-9 * ref.biased_variance);
}

TEST(Update, BatchEquivalenceProperty) {
  // Random lengths, offsets and scales, including large offsets that break the
  // naive sum-of-squares formula.
  RandomStream rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(500);
    const double offset = (rng.uniform01() - 0.5) * std::pow(10.0, static_cast<int>(rng.index(7)));
    const double scale = std::pow(10.0, static_cast<int>(rng.index(5)) - 2);
    std::vector<double> xs(n);
    for (auto& x : xs) x = offset + scale * rng.normal();
    const ArmState s = feed(xs);
    const auto ref = testing::batch_moments(xs);
    ASSERT_NEAR(s.mean, ref.mean, 1e-9 * std::max(1.0, std::abs(ref.mean))) << "trial " << trial;
    ASSERT_NEAR(biased_variance(s), ref.biased_variance,
                1e-9 * std::max(ref.biased_variance, 1e-12 * ref.mean * ref.mean))
        << "trial " << trial;
    ASSERT_GE(s.m2, 0.0);
  }
}

TEST(UcbVariance, PositiveDenominator) {
  // 4 log(4KB/delta) = 16, n = 400: denominator 1 - sqrt(16/400) = 0.8.
  EXPECT_NEAR(ucb_variance(2.0, 400, 4.0), 2.5, 1e-12);
  ArmState s;
  s.pulls = 400;
  s.m2 = 800.0;  // biased variance 2
  EXPECT_NEAR(ucb_variance(s, with_log_term(4.0)), 2.5, 1e-9);
}

TEST(UcbVariance, NonPositiveDenominatorIsInfinite) {
  EXPECT_EQ(ucb_variance(1.0, 4, 4.0), kInf);
  // Exactly zero denominator: 16 / 16 = 1.
  EXPECT_EQ(ucb_variance(1.0, 16, 4.0), kInf);
}

TEST(UcbVariance, ZeroVarianceIsZeroOnceValid) {
  EXPECT_EQ(ucb_variance(0.0, 1000, 4.0), 0.0);
}

TEST(UcbVariance, MonotoneInPulls) {
  const double log_term = std::log(4.0 * 10 * 5000 / 0.05);
  double prev = kInf;
  for (std::uint64_t n = 1; n < 20000; n += 7) {
    const double u = ucb_variance(1.7, n, log_term);
    ASSERT_LE(u, prev) << n;
    if (std::isfinite(u)) ASSERT_GE(u, 1.7);
    prev = u;
  }
}

TEST(ConfidenceConfig, Validation) {
  ConfidenceConfig c;
  c.delta = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.delta = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c.delta = 1.0;
  EXPECT_NO_THROW(c.validate());
  c.num_arms = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.num_arms = 1;
  c.budget = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ConfidenceConfig, LogTerms) {
  ConfidenceConfig c;
  c.delta = 0.05;
  c.num_arms = 10;
  c.budget = 1000;
  EXPECT_NEAR(c.confidence_log(), std::log(4.0 * 10 * 1000 / 0.05), 1e-12);
  c.log_kind = ConfidenceLog::kSingleCheck;
  EXPECT_NEAR(c.confidence_log(), std::log(20.0), 1e-12);
}

// Gaussian variance concentration with the n-1 divisor:
// |sigma^2 - s^2| <= 2 sigma^2 sqrt(log(4KB/delta) / n) should fail with
// probability at most delta / (2KB) per check.
TEST(VarianceConcentration, GaussianUnbiasedEstimator) {
  struct Point {
    std::uint64_t n;
    double delta;
  };
  const std::uint64_t k = 10, b = 10000;
  const double sigma2 = 2.0;
  for (const Point p : {Point{20, 0.05}, Point{100, 0.05}, Point{400, 0.2}, Point{50, 0.5}}) {
    const double radius = 2.0 * sigma2 * std::sqrt(std::log(4.0 * k * b / p.delta) / p.n);
    const int reps = 2000;
    int held = 0;
    for (int r = 0; r < reps; ++r) {
      RandomStream rng(derive_seed({p.n, static_cast<std::uint64_t>(r), 99}));
      ArmState s;
      for (std::uint64_t i = 0; i < p.n; ++i) s = update(s, 1.0 + std::sqrt(sigma2) * rng.normal());
      if (std::abs(sigma2 - unbiased_variance(s)) <= radius) ++held;
    }
    const double freq = static_cast<double>(held) / reps;
    EXPECT_GE(freq, 1.0 - p.delta / (2.0 * k * b)) << "n=" << p.n << " delta=" << p.delta;
  }
}

}  // namespace
}  // namespace robin
