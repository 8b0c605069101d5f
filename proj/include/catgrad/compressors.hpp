#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "catgrad/random.hpp"
#include "catgrad/vector.hpp"

namespace catgrad {

enum class SparseKind : std::uint8_t { TopT = 0, Stochastic = 1 };

struct SparseEntry {
  std::uint32_t index = 0;
  double value = 0.0;
  bool operator==(const SparseEntry&) const = default;
};

/// Q_T(g) of top-T sparsification, or a draw of Q_{T,p}(g) of stochastic sparsification.
/// Entries are sorted by strictly increasing index and carry nonzero values.
struct SparseGradient {
  std::size_t dim = 0;
  std::vector<SparseEntry> entries;
  SparseKind kind = SparseKind::TopT;

  std::size_t size() const noexcept { return entries.size(); }
  Vector to_dense() const;
  bool operator==(const SparseGradient&) const = default;
};

struct SignedIndex {
  std::uint32_t index = 0;
  bool negative = false;
  bool operator==(const SignedIndex&) const = default;
};

/// Sparsified and quantized gradient: every kept coordinate is reconstructed as
/// magnitude * sign, where magnitude is the Euclidean norm of the full gradient.
struct SQGradient {
  std::size_t dim = 0;
  double magnitude = 0.0;
  std::vector<SignedIndex> entries;

  std::size_t size() const noexcept { return entries.size(); }
  Vector to_dense() const;
  bool operator==(const SQGradient&) const = default;
};

/// Inclusion probabilities for stochastic sparsification. budget = sum(p).
/// Coordinates where the gradient is zero may carry p = 0 and are never sampled.
struct ProbabilityVector {
  Vector p;
  double budget = 0.0;
};

/// Indices of g ordered by decreasing |g_j|; equal magnitudes are ordered by smaller index.
std::vector<std::uint32_t> magnitude_order(std::span<const double> g);

/// Keeps the min(T, nnz(g)) largest-magnitude coordinates. Throws InvalidBudget unless 1 <= T <= d.
SparseGradient top_t_sparsify(std::span<const double> g, std::size_t budget);

/// Keeps signs of the same coordinates as top_t_sparsify and a single magnitude ||g||.
/// Throws ZeroGradient when g == 0.
SQGradient sparsify_quantize(std::span<const double> g, std::size_t budget);

/// Keeps coordinate j with probability p_j, scaled by 1/p_j. Unbiased for g.
SparseGradient stochastic_sparsify(std::span<const double> g, const ProbabilityVector& probs,
                                   CounterRng& rng);

/// Variance-minimising probabilities for a real budget T: the n_s largest coordinates are kept
/// surely, the rest proportionally to |g_j|. Zero coordinates get p = 0, so the effective
/// budget is min(T, nnz(g)).
ProbabilityVector optimal_probabilities(std::span<const double> g, double budget);

/// p_j = T/d for every coordinate.
ProbabilityVector uniform_probabilities(std::size_t dim, double budget);

/// E||Q_{T,p}(g)||^2 = sum_j g_j^2 / p_j.
double expected_sq_norm(std::span<const double> g, const ProbabilityVector& probs);

/// Throws InvalidBudget unless 1 <= budget <= dim.
void check_budget(double budget, std::size_t dim);

}  // namespace catgrad
