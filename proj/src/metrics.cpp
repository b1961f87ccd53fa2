#include "robin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "robin/errors.hpp"

namespace robin {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, std::size_t min_len) {
  if (x.size() != y.size()) {
    throw InputError("length mismatch: " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  }
  if (x.size() < min_len) {
    throw InputError("need at least " + std::to_string(min_len) + " points");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(x.begin(), x.end(), finite) || !std::all_of(y.begin(), y.end(), finite)) {
    throw InputError("inputs must be finite");
  }
}

// Number of tied pairs among runs of equal values in a sorted range.
template <typename It, typename Eq>
std::uint64_t tied_pairs(It first, It last, Eq eq) {
  std::uint64_t total = 0;
  while (first != last) {
    It run_end = std::next(first);
    while (run_end != last && eq(*first, *run_end)) ++run_end;
    const auto len = static_cast<std::uint64_t>(std::distance(first, run_end));
    total += len * (len - 1) / 2;
    first = run_end;
  }
  return total;
}

// Stable merge sort of ys that returns the number of inversions.
std::uint64_t sort_count_swaps(std::vector<double>& ys) {
  std::vector<double> buf(ys.size());
  std::uint64_t swaps = 0;
  const std::size_t n = ys.size();
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (ys[j] < ys[i]) {
          swaps += mid - i;
          buf[k++] = ys[j++];
        } else {
          buf[k++] = ys[i++];
        }
      }
      while (i < mid) buf[k++] = ys[i++];
      while (j < hi) buf[k++] = ys[j++];
    }
    ys.swap(buf);
  }
  return swaps;
}

}  // namespace

ErrorReport wce(std::span<const double> truth, std::span<const double> estimates) {
  check_pair(truth, estimates, 1);
  ErrorReport r;
  r.per_arm_abs_error.resize(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = std::abs(truth[i] - estimates[i]);
    r.per_arm_abs_error[i] = e;
    if (e > r.wce) {
      r.wce = e;
      r.argmax_arm = i;
    }
  }
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
  };
  if (constant(x) || constant(y)) throw UndefinedError("correlation of a constant vector");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedError("correlation of a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j.
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t ties_x =
      tied_pairs(order.begin(), order.end(), [&](auto a, auto b) { return x[a] == x[b]; });
  const std::uint64_t ties_xy = tied_pairs(order.begin(), order.end(), [&](auto a, auto b) {
    return x[a] == x[b] && y[a] == y[b];
  });

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::uint64_t swaps = sort_count_swaps(ys);
  const std::uint64_t ties_y =
      tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

  if (ties_x == n0 || ties_y == n0) throw UndefinedError("Kendall tau of an all-tied vector");

  // concordant - discordant
  const double s = static_cast<double>(n0) - static_cast<double>(ties_x) -
                   static_cast<double>(ties_y) + static_cast<double>(ties_xy) -
                   2.0 * static_cast<double>(swaps);
  const double denom = std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
  return std::clamp(s / denom, -1.0, 1.0);
}

}  // namespace robin
