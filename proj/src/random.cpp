#include "catgrad/random.hpp"

#include <cmath>
#include <numbers>

namespace catgrad {

std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t iteration, std::uint64_t node,
                       Purpose purpose) noexcept {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ iteration);
  k = mix64(k ^ (node << 8) ^ static_cast<std::uint64_t>(purpose));
  key_ = k;
}

CounterRng::result_type CounterRng::operator()() noexcept {
  // Two mixing rounds over (key, counter).
  return mix64(key_ ^ mix64(counter_++));
}

double CounterRng::uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double CounterRng::normal() noexcept {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::below(std::uint64_t n) noexcept {
  // Rejection sampling.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t r;
  do {
    r = (*this)();
  } while (r >= limit);
  return r % n;
}

}  // namespace catgrad
