#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace robin {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stable hash of a list of words. Used to derive stream keys and per-cell
/// seeds, so it must never change between releases.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t w : words) h = mix64(h ^ mix64(w));
  return h;
}

/// Counter-based 64-bit generator: the n-th output is mix64(key + n * gamma).
/// Two streams with different keys never share state, and a stream can be
/// positioned anywhere in O(1).
class CounterStream {
 public:
  using result_type = std::uint64_t;

  CounterStream() = default;
  explicit CounterStream(std::uint64_t key) : key_(mix64(key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    return mix64(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL);
  }

  std::uint64_t counter() const noexcept { return counter_; }
  void seek(std::uint64_t counter) noexcept { counter_ = counter; }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_ = mix64(0);
  std::uint64_t counter_ = 0;
};

/// A stream plus the distribution objects that carry hidden state (the normal
/// distribution caches its second variate). One per (replication, purpose).
class RandomStream {
 public:
  RandomStream() = default;
  explicit RandomStream(std::uint64_t key) : engine_(key) {}

  double uniform01() noexcept { return engine_.uniform01(); }
  double normal() { return normal_(engine_); }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  CounterStream& engine() noexcept { return engine_; }

 private:
  CounterStream engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace robin
