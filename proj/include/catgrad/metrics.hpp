#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "catgrad/trace.hpp"
#include "catgrad/tuner.hpp"

namespace catgrad {

class Problem;

/// Running minimum over a trajectory of a measure at every budget: alpha-bar_T (or the
/// beta/omega analogue). Starts at +infinity until the first observation.
class ImprovementProfile {
 public:
  ImprovementProfile(Measure m, std::size_t dim);

  void observe(const ImprovementCurve& curve);

  Measure measure() const noexcept { return measure_; }
  std::size_t dim() const noexcept { return minima_.size(); }
  std::size_t observations() const noexcept { return observations_; }
  /// Minimum at budget T in [1, d].
  double at(std::size_t budget) const;
  std::span<const double> minima() const noexcept { return minima_; }

 private:
  Measure measure_;
  std::vector<double> minima_;
  std::size_t observations_ = 0;
};

/// bar_T * d / T: the factor by which sparsification beats the worst-case T/d rate.
double speedup(double bar, std::size_t budget, std::size_t dim);
double speedup(const ImprovementProfile& profile, std::size_t budget);

enum class ProblemClass : std::uint8_t { StronglyConvex, Convex, NonConvex };
enum class Sparsification : std::uint8_t { Deterministic, Stochastic };

struct NoCompression {};
struct DataDependent {
  double bar = 1.0;  // alpha-bar_T for deterministic, omega-bar_T for stochastic sparsification
};
struct WorstCase {
  std::size_t budget = 1;
  std::size_t dim = 1;
};
using ComplexityBound = std::variant<NoCompression, DataDependent, WorstCase>;

struct TheoryParams {
  double kappa = 1.0;  // L / mu
  double eps0 = 1.0;   // F(x0) - F*  (strongly convex, non-convex)
  double eps = 1e-3;
  double smoothness = 1.0;
  double radius = 1.0;  // bound on ||x^i - x*|| (convex)
  double mu = 1.0;
  double sigma_sq = 0.0;
};

/// Iteration-complexity upper bound, natural logarithm throughout:
///   A_SC = kappa ln(eps0/eps), A_C = 2 L R^2 / eps, A_NC = 2 L eps0 / eps,
///   B_SC = 2 (1 + 2 sigma^2/(mu eps L)) (A_SC + kappa ln 2),
///   B_C  = 2 (1 + 2 sigma^2/(eps L)) A_C,  B_NC = 2 (1 + 2 sigma^2/eps) A_NC,
/// scaled by 1/bar (data dependent) or d/T (worst case). Returns 0 when eps >= eps0.
double theory_iters(ProblemClass cls, Sparsification kind, const TheoryParams& params,
                    const ComplexityBound& bound);

/// Fixed step sizes that make the stochastic bounds hold for target eps.
double theory_step_size(ProblemClass cls, double omega_bar, const TheoryParams& params);

/// max over `probes` draws of ||g_j - grad F(x)||^2, where g_j is a minibatch gradient of a
/// randomly chosen local objective. batch = 0 uses the whole local objective.
double estimate_sigma_sq(const Problem& global, std::span<const Problem> locals,
                         std::span<const double> x, std::size_t batch, std::size_t probes,
                         std::uint64_t seed);

enum class TargetKind : std::uint8_t { GradNormSq, LossGap };

/// Index of the first record meeting the target. LossGap needs the trace reference loss.
std::optional<std::size_t> iterations_to_accuracy(const RunTrace& trace, double eps,
                                                  TargetKind kind);

/// Cumulative cost at the first record meeting the target; nullopt when never reached.
std::optional<double> bits_to_accuracy(const RunTrace& trace, double eps, TargetKind kind);

/// {"speedup_curve": [...], "alpha_profile": [...], "bits_to_eps": {scheme: value|null}}
std::string metrics_report_json(
    const ImprovementProfile* profile,
    const std::vector<std::pair<std::string, std::optional<double>>>& bits_to_eps);

}  // namespace catgrad
