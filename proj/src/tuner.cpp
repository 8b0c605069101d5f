#include "catgrad/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "catgrad/error.hpp"

namespace catgrad {

const char* to_string(Measure m) noexcept {
  switch (m) {
    case Measure::Alpha:
      return "alpha";
    case Measure::Beta:
      return "beta";
    case Measure::Omega:
      return "omega";
  }
  return "?";
}

ImprovementCurve::ImprovementCurve(std::span<const double> g)
    : gradient_(g.begin(), g.end()), order_(magnitude_order(g)) {
  const std::size_t d = g.size();
  sorted_.resize(d);
  prefix_sq_.assign(d + 1, 0.0);
  prefix_abs_.assign(d + 1, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    const double a = std::abs(g[order_[k]]);
    sorted_[k] = a;
    prefix_sq_[k + 1] = prefix_sq_[k] + a * a;
    prefix_abs_[k + 1] = prefix_abs_[k] + a;
    nonzeros_ += (a != 0.0);
  }
  if (nonzeros_ == 0) throw ZeroGradient();
  suffix_abs_.assign(nonzeros_ + 1, 0.0);
  for (std::size_t k = nonzeros_; k-- > 0;) suffix_abs_[k] = suffix_abs_[k + 1] + sorted_[k];
}

double ImprovementCurve::alpha(std::size_t budget) const {
  check_budget(static_cast<double>(budget), dim());
  return prefix_sq_[budget] / norm_sq();
}

double ImprovementCurve::beta(std::size_t budget) const {
  check_budget(static_cast<double>(budget), dim());
  const double s = prefix_abs_[budget];
  return s * s / (static_cast<double>(budget) * norm_sq());
}

std::size_t ImprovementCurve::saturated_count(double budget, std::size_t start) const {
  std::size_t n = start;
  while (n < nonzeros_ && sorted_[n] * (budget - static_cast<double>(n)) > suffix_abs_[n]) ++n;
  return n;
}

double ImprovementCurve::omega_with(double budget, std::size_t saturated) const {
  if (budget >= static_cast<double>(nonzeros_)) return 1.0;
  const double tail = suffix_abs_[saturated];
  const double denom = prefix_sq_[saturated] + tail * tail / (budget - static_cast<double>(saturated));
  return norm_sq() / denom;
}

double ImprovementCurve::omega(double budget) const {
  check_budget(budget, dim());
  return omega_with(budget, saturated_count(budget, 0));
}

ProbabilityVector ImprovementCurve::probabilities(double budget) const {
  check_budget(budget, dim());
  ProbabilityVector out{Vector(dim(), 0.0), 0.0};
  if (budget >= static_cast<double>(nonzeros_)) {
    for (std::size_t k = 0; k < nonzeros_; ++k) out.p[order_[k]] = 1.0;
    out.budget = static_cast<double>(nonzeros_);
    return out;
  }
  const std::size_t n = saturated_count(budget, 0);
  const double scale = (budget - static_cast<double>(n)) / suffix_abs_[n];
  for (std::size_t k = 0; k < nonzeros_; ++k) {
    out.p[order_[k]] = k < n ? 1.0 : std::min(1.0, sorted_[k] * scale);
  }
  for (double p : out.p) out.budget += p;
  return out;
}

double ImprovementCurve::value(Measure m, std::size_t budget) const {
  switch (m) {
    case Measure::Alpha:
      return alpha(budget);
    case Measure::Beta:
      return beta(budget);
    case Measure::Omega:
      return omega(static_cast<double>(budget));
  }
  return 0.0;
}

std::vector<double> ImprovementCurve::sweep(Measure m) const {
  std::vector<double> out(dim());
  if (m != Measure::Omega) {
    for (std::size_t t = 1; t <= dim(); ++t) out[t - 1] = value(m, t);
    return out;
  }
  std::size_t n = 0;
  for (std::size_t t = 1; t <= dim(); ++t) {
    const double budget = static_cast<double>(t);
    n = saturated_count(budget, n);
    out[t - 1] = omega_with(budget, n);
  }
  return out;
}

double omega_for(std::span<const double> g, const ProbabilityVector& probs) {
  const double num = norm_sq(g);
  if (num == 0.0) throw ZeroGradient();
  return num / expected_sq_norm(g, probs);
}

OmegaValue omega(std::span<const double> g, double budget) {
  if (norm_sq(g) == 0.0) throw ZeroGradient();
  ProbabilityVector p = optimal_probabilities(g, budget);
  const double w = omega_for(g, p);
  return {w, std::move(p)};
}

namespace {

bool ties_or_beats(double eff, double best) { return eff >= best * (1.0 - kTieTolerance); }

TunerResult make_result(const ImprovementCurve& curve, Measure m, const CostModel& model,
                        std::size_t budget) {
  TunerResult r;
  r.budget = budget;
  r.improvement = curve.value(m, budget);
  r.cost = model.cost(budget);
  r.efficiency = r.improvement / r.cost;
  if (m == Measure::Omega) r.probabilities = curve.probabilities(static_cast<double>(budget));
  return r;
}

// Smallest T in [lo, hi] whose efficiency ties the maximum.
template <class Eff>
std::size_t first_tying(std::size_t lo, std::size_t hi, double best, Eff&& eff) {
  for (std::size_t t = lo; t <= hi; ++t) {
    if (ties_or_beats(eff(t), best)) return t;
  }
  return hi;
}

}  // namespace

TunerResult select_t(const ImprovementCurve& curve, Measure m, const CostModel& model) {
  require_same_size(model.dim(), curve.dim(), "select_t");
  const std::size_t d = curve.dim();
  auto eff = [&](std::size_t t) { return curve.value(m, t) / model.cost(t); };

  if (m == Measure::Alpha && model.is_affine()) {
    // Quasi-concave ratio: stop once it falls.
    std::vector<double> seen;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 1; t <= d; ++t) {
      const double e = eff(t);
      seen.push_back(e);
      best = std::max(best, e);
      if (e < best * (1.0 - kTieTolerance)) break;
    }
    return make_result(curve, m, model,
                       first_tying(1, seen.size(), best, [&](std::size_t t) { return seen[t - 1]; }));
  }

  if (m == Measure::Alpha) {
    // Maximum at a block end; walk back inside the winning block for ties.
    const std::vector<std::size_t> ends = model.block_ends();
    std::vector<double> at_end(ends.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ends.size(); ++k) {
      at_end[k] = eff(ends[k]);
      best = std::max(best, at_end[k]);
    }
    std::size_t k = 0;
    while (!ties_or_beats(at_end[k], best)) ++k;
    const std::size_t lo = k == 0 ? 1 : ends[k - 1] + 1;
    return make_result(curve, m, model, first_tying(lo, ends[k], best, eff));
  }

  const std::vector<double> values = curve.sweep(m);
  const std::size_t upper = m == Measure::Omega ? curve.nonzeros() : d;
  std::vector<double> effs(upper);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t <= upper; ++t) {
    effs[t - 1] = values[t - 1] / model.cost(t);
    best = std::max(best, effs[t - 1]);
  }
  return make_result(curve, m, model,
                     first_tying(1, upper, best, [&](std::size_t t) { return effs[t - 1]; }));
}

namespace {

double direct_measure(std::span<const double> g, Measure m, std::size_t budget, double gnorm_sq) {
  switch (m) {
    case Measure::Alpha: {
      double s = 0.0;
      for (const auto& e : top_t_sparsify(g, budget).entries) s += e.value * e.value;
      return s / gnorm_sq;
    }
    case Measure::Beta: {
      const Vector q = sparsify_quantize(g, budget).to_dense();
      const double inner = dot(g, q);
      return inner * inner / (static_cast<double>(budget) * gnorm_sq * gnorm_sq);
    }
    case Measure::Omega:
      return omega_for(g, optimal_probabilities(g, static_cast<double>(budget)));
  }
  return 0.0;
}

}  // namespace

TunerResult select_t_bruteforce(std::span<const double> g, Measure m, const CostModel& model) {
  require_same_size(model.dim(), g.size(), "select_t_bruteforce");
  const double gnorm_sq = norm_sq(g);
  if (gnorm_sq == 0.0) throw ZeroGradient();
  const std::size_t d = g.size();
  std::vector<double> values(d), effs(d);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t <= d; ++t) {
    values[t - 1] = direct_measure(g, m, t, gnorm_sq);
    effs[t - 1] = values[t - 1] / model.cost(t);
    best = std::max(best, effs[t - 1]);
  }
  const std::size_t t = first_tying(1, d, best, [&](std::size_t t) { return effs[t - 1]; });
  TunerResult r;
  r.budget = t;
  r.improvement = values[t - 1];
  r.cost = model.cost(t);
  r.efficiency = effs[t - 1];
  if (m == Measure::Omega) r.probabilities = optimal_probabilities(g, static_cast<double>(t));
  return r;
}

std::size_t alistarh_t(const ImprovementCurve& curve) {
  const double target = std::sqrt(curve.norm_sq());
  const auto prefix = curve.prefix_abs();
  for (std::size_t t = 1; t <= curve.dim(); ++t) {
    if (prefix[t] >= target) return t;
  }
  // Reached only through rounding.
  return curve.nonzeros();
}

std::size_t alistarh_t(std::span<const double> g) { return alistarh_t(ImprovementCurve(g)); }

}  // namespace catgrad
