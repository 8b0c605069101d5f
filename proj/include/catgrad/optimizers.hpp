#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "catgrad/codec.hpp"
#include "catgrad/costmodel.hpp"
#include "catgrad/metrics.hpp"
#include "catgrad/problems.hpp"
#include "catgrad/trace.hpp"
#include "catgrad/tuner.hpp"

namespace catgrad {

// ---------------------------------------------------------------------------
// Single steps

/// Compression operator used for a step.
enum class Compressor : std::uint8_t { Dense, TopT, SQ, Stochastic };

/// Which improvement measure drives each compressor.
Measure measure_for(Compressor c);
/// Payload formula that a compressor's messages follow.
CostScheme cost_scheme_for(Compressor c);

/// Outcome of one update x+ = x - step_size * Q(g).
struct Step {
  Vector next;
  std::size_t budget = 0;  // T used; d for dense steps
  double measure = 1.0;    // alpha(T), beta(T) or omega(T); 1 for dense
  double step_size = 0.0;
  CompressedGradient message;
  double cost = 0.0;
  std::uint64_t payload_bits = 0;
};

/// Step size that realizes the descent bound for a compressor at budget T on an L-smooth objective:
///   TopT and Dense 1/L,  SQ sqrt(beta)/(sqrt(T) L),  Stochastic omega/L.
double descent_step_size(Compressor c, double measure, std::size_t budget, double smoothness);

/// Compresses g at budget T, moves x and charges the message under `model`.
/// `rng` is required for Stochastic; `step_override` replaces that step.
/// Throws ZeroGradient when g == 0.
Step compressed_step(std::span<const double> x, const ImprovementCurve& curve, Compressor c,
                     std::size_t budget, double smoothness, const CostModel& model,
                     CounterRng* rng = nullptr, std::optional<double> step_override = std::nullopt);

/// Plain gradient step with step size 1/L (or the override), charged as a dense message.
Step dense_step(std::span<const double> x, std::span<const double> g, double smoothness,
                const CostModel& model, std::optional<double> step_override = std::nullopt);

/// CAT top-T step: T from select_t(Alpha), step 1/L.
Step cat_sparse_step(std::span<const double> x, const Problem& problem, const CostModel& model);
/// CAT S+Q step: T from select_t(Beta), step sqrt(beta(T))/(sqrt(T) L).
Step cat_sq_step(std::span<const double> x, const Problem& problem, const CostModel& model);
/// CAT stochastic step: (T, p*) from select_t(Omega), step omega(T)/L.
Step cat_ss_step(std::span<const double> x, const Problem& problem, const CostModel& model,
                 CounterRng& rng, std::optional<double> step_override = std::nullopt);
/// S+Q step with T chosen by the smallest-prefix heuristic.
Step alistarh_sq_step(std::span<const double> x, const Problem& problem, const CostModel& model);

// ---------------------------------------------------------------------------
// Multi-node compressed SGD

struct Worker {
  const Problem* objective = nullptr;
  /// Minibatch size drawn without replacement from the local rows; 0 uses all rows.
  std::size_t batch_size = 0;
  /// Random stream id; defaults to the worker index.
  std::uint64_t stream = 0;
};

struct MultinodeOptions {
  CostModel model;
  std::uint64_t seed = 0;
  /// Smoothness constant shared by every local objective.
  double smoothness = 1.0;
  /// Fixed step size; otherwise omega/(2L) with omega from omega_bar or the aggregate.
  std::optional<double> step_override;
  /// Uniform lower bound omega-bar_T; when unset the per-iteration aggregate is used.
  std::optional<double> omega_bar;
  /// Route messages through frame encoding and the simulated master.
  bool via_transport = false;
};

struct MultinodeStep {
  Vector next;
  std::vector<std::size_t> budgets;  // 0 for a worker with a zero gradient
  std::vector<double> omegas;
  double aggregate_omega = 1.0;
  double step_size = 0.0;
  double cost = 0.0;
  std::uint64_t payload_bits = 0;
};

/// (sum_j 1/(n omega_j))^-1; workers with omega_j = +infinity (zero gradient) contribute 0.
double aggregate_omega(std::span<const double> omegas);

/// x+ = x - step * (1/n) sum_j Q_{T_j,p_j}(g_j): each worker CAT-selects its own budget
/// and probabilities from its stochastic gradient, values travel at the model precision.
MultinodeStep multinode_step(std::span<const double> x, std::span<const Worker> workers,
                             std::uint32_t iteration, const MultinodeOptions& options);

// ---------------------------------------------------------------------------
// Full runs

struct FullGd {};
struct FixedBudget {
  std::size_t budget = 1;
};
struct CatSparse {};
struct CatSQ {};
struct CatStochastic {};
struct AlistarhSQ {};
/// Re-tunes T with CAT every `period` iterations and reuses it in between.
struct Hybrid {
  std::size_t period = 200;
  Compressor base = Compressor::SQ;
};
using SchemeConfig =
    std::variant<FullGd, FixedBudget, CatSparse, CatSQ, CatStochastic, AlistarhSQ, Hybrid>;

std::string to_string(const SchemeConfig& s);

struct GradNormTarget {
  double eps = 1e-6;
};
struct LossGapTarget {
  double eps = 1e-6;
  /// F*; computed by a long accelerated full-gradient run when absent.
  std::optional<double> reference_loss;
};
using Target = std::variant<GradNormTarget, LossGapTarget>;

struct AutoStep {};
struct ManualStep {
  double gamma = 0.0;
};
using StepRule = std::variant<AutoStep, ManualStep>;

struct OptimizerConfig {
  SchemeConfig scheme = CatSparse{};
  CostSpec cost;
  Precision fpp = Precision::Double;
  std::size_t max_iters = 1000;
  Target target = GradNormTarget{};
  std::uint64_t seed = 0;
  StepRule step = AutoStep{};
  std::size_t workers = 1;
  std::size_t batch_size = 0;
  /// Multi-node only: use omega_bar/(2L) instead of the per-iteration aggregate.
  std::optional<double> omega_bar;
  std::optional<double> sigma_sq_bound;
  /// Multi-node only: route every round through the frame codec.
  bool via_transport = false;
  /// Record the running minimum of the scheme's measure at every budget.
  bool track_profile = false;
  /// Starting point; empty selects the problem default.
  Vector x0;
  /// Consecutive loss increases tolerated under automatic steps before aborting.
  std::size_t divergence_window = 100;
};

struct RunResult {
  RunTrace trace;
  Vector x;
  std::optional<ImprovementProfile> profile;
};

/// Zeros for logistic problems; a seeded standard normal draw for quadratics.
Vector default_start(const Problem& problem, std::uint64_t seed);

struct ReferenceSolution {
  Vector x;
  double loss = 0.0;
};

/// x* estimate: accelerated gradient descent with function-value restart until
/// ||grad||^2 <= tol or max_iters. Returns the best point seen. ||x^0 - x|| gives the
/// post hoc radius R for the convex bound.
ReferenceSolution reference_solution(const Problem& problem, double grad_tol = 1e-24,
                                     std::size_t max_iters = 200000);

/// F* estimate: the loss of reference_solution.
double reference_loss(const Problem& problem, double grad_tol = 1e-24,
                      std::size_t max_iters = 200000);

/// Iterates until the target, max_iters, an exact zero gradient, or divergence.
/// Deterministic for a given config and seed.
RunResult run(const OptimizerConfig& config, const Problem& problem);

}  // namespace catgrad
