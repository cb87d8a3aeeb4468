#pragma once

#include <cstdint>

namespace epsinas {

// SplitMix64 in counter form: the i-th output of a stream with key k is
// mix(k + (i + 1) * 0x9E3779B97F4A7C15). Every distribution below is built
// from these outputs with fixed arithmetic, so draws are identical on every
// platform and in any language that reproduces the mixer.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t next_u64() noexcept;

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() noexcept;
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) noexcept;
  /// Standard normal via Box-Muller; each call consumes two outputs.
  double normal() noexcept;
  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;

}  // namespace epsinas
