#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "catgrad/compressors.hpp"
#include "catgrad/costmodel.hpp"

namespace catgrad {

/// Improvement measure paired with each compressor:
///   Alpha  top-T sparsification        ||Q_T(g)||^2 / ||g||^2
///   Beta   sparsification + quantizing (sum of the T largest |g_j|)^2 / (T ||g||^2)
///   Omega  stochastic sparsification   ||g||^2 / E||Q_{T,p*}(g)||^2
enum class Measure : std::uint8_t { Alpha, Beta, Omega };

const char* to_string(Measure m) noexcept;

/// Relative slack under which two efficiencies count as tied; ties go to the smaller T.
inline constexpr double kTieTolerance = 1e-12;

/// Sorted-magnitude prefix sums of one gradient. After the O(d log d) construction every
/// measure is O(1) per T (Omega is amortised O(1) across an ascending sweep).
class ImprovementCurve {
 public:
  /// Throws ZeroGradient when g == 0.
  explicit ImprovementCurve(std::span<const double> g);

  std::size_t dim() const noexcept { return gradient_.size(); }
  std::size_t nonzeros() const noexcept { return nonzeros_; }
  double norm_sq() const noexcept { return prefix_sq_.back(); }
  std::span<const double> gradient() const noexcept { return gradient_; }

  /// |g| in descending order, and original index of each sorted position.
  std::span<const double> sorted_magnitudes() const noexcept { return sorted_; }
  std::span<const std::uint32_t> order() const noexcept { return order_; }
  /// prefix_sq()[T] = sum of the T largest g_j^2; prefix_sq()[d] == norm_sq().
  std::span<const double> prefix_sq() const noexcept { return prefix_sq_; }
  std::span<const double> prefix_abs() const noexcept { return prefix_abs_; }

  double alpha(std::size_t budget) const;
  double beta(std::size_t budget) const;
  /// omega for the variance-optimal probabilities at a real budget in [1, d].
  double omega(double budget) const;
  /// The variance-optimal probabilities themselves, indexed like the gradient.
  ProbabilityVector probabilities(double budget) const;

  double value(Measure m, std::size_t budget) const;

  /// Measure values for T = 1..d (index T-1).
  std::vector<double> sweep(Measure m) const;

 private:
  std::size_t saturated_count(double budget, std::size_t start) const;
  double omega_with(double budget, std::size_t saturated) const;

  Vector gradient_;
  std::vector<std::uint32_t> order_;
  std::vector<double> sorted_;
  std::vector<double> prefix_sq_;
  std::vector<double> prefix_abs_;
  std::vector<double> suffix_abs_;  // sum of sorted_[k..nnz)
  std::size_t nonzeros_ = 0;
};

struct TunerResult {
  std::size_t budget = 0;
  double improvement = 0.0;
  double cost = 0.0;
  double efficiency = 0.0;
  std::optional<ProbabilityVector> probabilities;  // Omega only
};

struct OmegaValue {
  double omega = 0.0;
  ProbabilityVector probabilities;
};

/// omega_{p*}(T) and p* via optimal_probabilities. Throws ZeroGradient.
OmegaValue omega(std::span<const double> g, double budget);

/// ||g||^2 / E||Q_{T,p}(g)||^2 for arbitrary probabilities.
double omega_for(std::span<const double> g, const ProbabilityVector& probs);

/// argmax_T measure(T)/C(T), ties toward smaller T. Alpha uses early exit under affine costs
/// and packet-boundary candidates under packet costs; every other combination scans [1, d].
TunerResult select_t(const ImprovementCurve& curve, Measure m, const CostModel& model);

/// Exhaustive reference: every measure recomputed from its definition for every T in [1, d].
TunerResult select_t_bruteforce(std::span<const double> g, Measure m, const CostModel& model);

/// Smallest T whose T largest |g_j| sum to at least ||g||_2. Throws ZeroGradient.
std::size_t alistarh_t(const ImprovementCurve& curve);
std::size_t alistarh_t(std::span<const double> g);

}  // namespace catgrad
