#pragma once

#include <cstdint>
#include <limits>

namespace catgrad {

/// Counter-based random source. The stream is a pure function of
/// (seed, iteration, node, purpose) and a running counter, so any draw can be
/// reproduced without replaying earlier ones.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  /// Purposes keep independent draws for one (iteration, node) apart.
  enum class Purpose : std::uint32_t { Sparsify = 0, Minibatch = 1, Probe = 2, Init = 3, Test = 4 };

  explicit CounterRng(std::uint64_t seed, std::uint64_t iteration = 0, std::uint64_t node = 0,
                      Purpose purpose = Purpose::Sparsify) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Standard normal via Box-Muller; the spare value is discarded to keep draws counter-aligned.
  double normal() noexcept;

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// SplitMix64 finaliser; exposed for deterministic hashing of seeds.
std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace catgrad
