#include "catgrad/compressors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "catgrad/error.hpp"

namespace catgrad {

Vector SparseGradient::to_dense() const {
  Vector out(dim, 0.0);
  for (const auto& e : entries) out[e.index] = e.value;
  return out;
}

Vector SQGradient::to_dense() const {
  Vector out(dim, 0.0);
  for (const auto& e : entries) out[e.index] = e.negative ? -magnitude : magnitude;
  return out;
}

void check_budget(double budget, std::size_t dim) {
  if (!(budget >= 1.0) || budget > static_cast<double>(dim)) {
    throw InvalidBudget("budget " + std::to_string(budget) + " outside [1, " + std::to_string(dim) +
                        "]");
  }
}

std::vector<std::uint32_t> magnitude_order(std::span<const double> g) {
  std::vector<std::uint32_t> order(g.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return std::abs(g[a]) > std::abs(g[b]); });
  return order;
}

namespace {

// Indices of the min(T, nnz) largest |g_j|, returned in increasing index order.
std::vector<std::uint32_t> top_indices(std::span<const double> g, std::size_t budget) {
  check_budget(static_cast<double>(budget), g.size());
  std::vector<std::uint32_t> idx;
  idx.reserve(g.size());
  for (std::uint32_t j = 0; j < g.size(); ++j) {
    if (g[j] != 0.0) idx.push_back(j);
  }
  const std::size_t keep = std::min(budget, idx.size());
  auto by_magnitude = [&](std::uint32_t a, std::uint32_t b) {
    const double ma = std::abs(g[a]), mb = std::abs(g[b]);
    return ma > mb || (ma == mb && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                   by_magnitude);
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

SparseGradient top_t_sparsify(std::span<const double> g, std::size_t budget) {
  SparseGradient out{g.size(), {}, SparseKind::TopT};
  for (std::uint32_t j : top_indices(g, budget)) out.entries.push_back({j, g[j]});
  return out;
}

SQGradient sparsify_quantize(std::span<const double> g, std::size_t budget) {
  const double magnitude = norm(g);
  if (magnitude == 0.0) throw ZeroGradient();
  SQGradient out{g.size(), magnitude, {}};
  for (std::uint32_t j : top_indices(g, budget)) out.entries.push_back({j, g[j] < 0.0});
  return out;
}

SparseGradient stochastic_sparsify(std::span<const double> g, const ProbabilityVector& probs,
                                   CounterRng& rng) {
  require_same_size(g.size(), probs.p.size(), "stochastic_sparsify");
  SparseGradient out{g.size(), {}, SparseKind::Stochastic};
  for (std::uint32_t j = 0; j < g.size(); ++j) {
    const double pj = probs.p[j];
    if (pj <= 0.0) continue;
    // One draw per eligible coordinate.
    const double u = rng.uniform();
    if (u < pj && g[j] != 0.0) out.entries.push_back({j, g[j] / pj});
  }
  return out;
}

ProbabilityVector optimal_probabilities(std::span<const double> g, double budget) {
  check_budget(budget, g.size());
  std::vector<std::uint32_t> order = magnitude_order(g);
  std::size_t nnz = 0;
  double tail = 0.0;
  for (std::uint32_t j : order) {
    if (g[j] == 0.0) break;
    ++nnz;
    tail += std::abs(g[j]);
  }
  if (nnz == 0) throw ZeroGradient();

  ProbabilityVector out{Vector(g.size(), 0.0), 0.0};
  if (budget >= static_cast<double>(nnz)) {
    for (std::size_t k = 0; k < nnz; ++k) out.p[order[k]] = 1.0;
    out.budget = static_cast<double>(nnz);
    return out;
  }

  // Saturate the largest coordinates until the proportional rule keeps every remaining p <= 1.
  std::size_t saturated = 0;
  while (saturated < nnz) {
    const double head = std::abs(g[order[saturated]]);
    if (head * (budget - static_cast<double>(saturated)) <= tail) break;
    tail -= head;
    ++saturated;
  }
  // Recompute the tail sum directly.
  tail = 0.0;
  for (std::size_t k = saturated; k < nnz; ++k) tail += std::abs(g[order[k]]);

  const double scale = (budget - static_cast<double>(saturated)) / tail;
  for (std::size_t k = 0; k < saturated; ++k) out.p[order[k]] = 1.0;
  for (std::size_t k = saturated; k < nnz; ++k) {
    out.p[order[k]] = std::min(1.0, std::abs(g[order[k]]) * scale);
  }
  out.budget = std::accumulate(out.p.begin(), out.p.end(), 0.0);
  return out;
}

ProbabilityVector uniform_probabilities(std::size_t dim, double budget) {
  check_budget(budget, dim);
  const double pj = budget / static_cast<double>(dim);
  return {Vector(dim, pj), budget};
}

double expected_sq_norm(std::span<const double> g, const ProbabilityVector& probs) {
  require_same_size(g.size(), probs.p.size(), "expected_sq_norm");
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (g[j] == 0.0) continue;
    if (probs.p[j] <= 0.0) {
      throw Error("expected_sq_norm: nonzero coordinate " + std::to_string(j) +
                  " has zero inclusion probability");
    }
    s += g[j] * g[j] / probs.p[j];
  }
  return s;
}

}  // namespace catgrad
