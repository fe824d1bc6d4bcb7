#ifndef ERMLAB_RNG_HPP
#define ERMLAB_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace ermlab {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream. The i-th raw output is a pure function of
/// (key, i), so a stream can be recreated anywhere from its key alone.
/// Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Stream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ + (++counter_) * kGolden); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_positive() noexcept { return 1.0 - uniform(); }

  /// Standard normal by Box-Muller; the second variate of each pair is cached.
  double normal() noexcept {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_positive()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  bool bernoulli(double prob) noexcept { return uniform() < prob; }

  /// +1 or -1 with equal probability.
  double sign() noexcept { return ((*this)() >> 63) != 0 ? 1.0 : -1.0; }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Stream for replication `rep` under master `seed`. Streams for distinct
/// (seed, rep) pairs are statistically independent and do not depend on the
/// order in which replications execute.
inline Stream derive(std::uint64_t seed, std::uint64_t rep) noexcept {
  return Stream(mix64(mix64(seed ^ 0x243f6a8885a308d3ULL) + mix64(rep + 0x13198a2e03707344ULL)));
}

}  // namespace ermlab

#endif  // ERMLAB_RNG_HPP
