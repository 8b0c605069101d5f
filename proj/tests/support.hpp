#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "catgrad/random.hpp"
#include "catgrad/vector.hpp"

namespace catgrad::testing {

inline CounterRng test_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return CounterRng(seed, stream, 0, CounterRng::Purpose::Test);
}

/// Nonzero gradient with a mix of shapes: dense normal, heavy-tailed, integer ties, zeros.
inline Vector random_gradient(CounterRng& rng, std::size_t dim) {
  Vector g(dim);
  const auto shape = rng.below(4);
  for (double& v : g) {
    switch (shape) {
      case 0: v = rng.normal(); break;
      case 1: v = rng.normal() * std::exp(3.0 * rng.normal()); break;
      case 2: v = static_cast<double>(rng.below(5)) - 2.0; break;
      default: v = rng.uniform() < 0.3 ? rng.normal() : 0.0; break;
    }
  }
  if (norm_sq(g) == 0.0) g[rng.below(dim)] = 1.0;
  return g;
}

inline std::size_t random_dim(CounterRng& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.below(hi - lo + 1);
}

}  // namespace catgrad::testing
