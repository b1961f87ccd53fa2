#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace robin {

/// Worst-case estimation error over all arms.
struct ErrorReport {
  double wce = 0.0;
  std::vector<double> per_arm_abs_error;
  /// First arm attaining the maximum.
  std::size_t argmax_arm = 0;
};

/// max_i |truth_i - estimate_i|. Throws InputError on length mismatch, empty
/// input or non-finite entries.
ErrorReport wce(std::span<const double> truth, std::span<const double> estimates);

/// Product-moment correlation. Throws InputError for mismatched lengths or
/// fewer than two points, UndefinedError if either side is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> x);

/// Pearson correlation of the average-rank transforms.
double spearman(std::span<const double> x, std::span<const double> y);

/// Tie-corrected Kendall tau-b in O(n log n). Throws UndefinedError when
/// either side has no untied pair.
double kendall_tau(std::span<const double> x, std::span<const double> y);

}  // namespace robin
