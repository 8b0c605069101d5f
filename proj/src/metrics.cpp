#include "catgrad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "catgrad/error.hpp"
#include "catgrad/problems.hpp"
#include "catgrad/random.hpp"

namespace catgrad {

ImprovementProfile::ImprovementProfile(Measure m, std::size_t dim)
    : measure_(m), minima_(dim, std::numeric_limits<double>::infinity()) {}

void ImprovementProfile::observe(const ImprovementCurve& curve) {
  require_same_size(minima_.size(), curve.dim(), "ImprovementProfile::observe");
  const std::vector<double> values = curve.sweep(measure_);
  for (std::size_t k = 0; k < values.size(); ++k) minima_[k] = std::min(minima_[k], values[k]);
  ++observations_;
}

double ImprovementProfile::at(std::size_t budget) const {
  check_budget(static_cast<double>(budget), minima_.size());
  return minima_[budget - 1];
}

double speedup(double bar, std::size_t budget, std::size_t dim) {
  check_budget(static_cast<double>(budget), dim);
  return bar * static_cast<double>(dim) / static_cast<double>(budget);
}

double speedup(const ImprovementProfile& profile, std::size_t budget) {
  return speedup(profile.at(budget), budget, profile.dim());
}

double theory_iters(ProblemClass cls, Sparsification kind, const TheoryParams& p,
                    const ComplexityBound& bound) {
  if (!(p.eps > 0.0) || !(p.smoothness > 0.0)) throw ConfigError("theory_iters needs eps, L > 0");
  if (cls != ProblemClass::Convex && p.eps >= p.eps0) return 0.0;

  double base = 0.0;
  switch (cls) {
    case ProblemClass::StronglyConvex: {
      const double a = p.kappa * std::log(p.eps0 / p.eps);
      base = kind == Sparsification::Deterministic
                 ? a
                 : 2.0 * (1.0 + 2.0 * p.sigma_sq / (p.mu * p.eps * p.smoothness)) *
                       (a + p.kappa * std::log(2.0));
      break;
    }
    case ProblemClass::Convex: {
      const double a = 2.0 * p.smoothness * p.radius * p.radius / p.eps;
      base = kind == Sparsification::Deterministic
                 ? a
                 : 2.0 * (1.0 + 2.0 * p.sigma_sq / (p.eps * p.smoothness)) * a;
      break;
    }
    case ProblemClass::NonConvex: {
      const double a = 2.0 * p.smoothness * p.eps0 / p.eps;
      base = kind == Sparsification::Deterministic ? a : 2.0 * (1.0 + 2.0 * p.sigma_sq / p.eps) * a;
      break;
    }
  }

  if (const auto* dd = std::get_if<DataDependent>(&bound)) {
    if (!(dd->bar > 0.0)) throw ConfigError("data-dependent bound needs a positive measure");
    return base / dd->bar;
  }
  if (const auto* wc = std::get_if<WorstCase>(&bound)) {
    check_budget(static_cast<double>(wc->budget), wc->dim);
    return base * static_cast<double>(wc->dim) / static_cast<double>(wc->budget);
  }
  return base;
}

double theory_step_size(ProblemClass cls, double omega_bar, const TheoryParams& p) {
  switch (cls) {
    case ProblemClass::NonConvex:
      return omega_bar / (2.0 * p.smoothness) / (2.0 * p.sigma_sq / p.eps + 1.0);
    case ProblemClass::Convex:
      return omega_bar / 2.0 / (2.0 * p.sigma_sq / p.eps + p.smoothness);
    case ProblemClass::StronglyConvex:
      return omega_bar / 2.0 / (2.0 * p.sigma_sq / (p.mu * p.eps) + p.smoothness);
  }
  return 0.0;
}

double estimate_sigma_sq(const Problem& global, std::span<const Problem> locals,
                         std::span<const double> x, std::size_t batch, std::size_t probes,
                         std::uint64_t seed) {
  if (locals.empty()) throw ConfigError("estimate_sigma_sq needs at least one local objective");
  const Vector full = global.gradient(x);
  double worst = 0.0;
  for (std::size_t k = 0; k < probes; ++k) {
    CounterRng rng(seed, k, 0, CounterRng::Purpose::Probe);
    const Problem& local = locals[rng.below(locals.size())];
    Vector g;
    const std::size_t n = local.samples();
    if (local.kind() == Problem::Kind::Logistic && batch > 0 && batch < n) {
      std::vector<std::size_t> rows(n);
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      for (std::size_t i = 0; i < batch; ++i) std::swap(rows[i], rows[i + rng.below(n - i)]);
      rows.resize(batch);
      g = local.gradient_rows(x, rows);
    } else {
      g = local.gradient(x);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) s += (g[j] - full[j]) * (g[j] - full[j]);
    worst = std::max(worst, s);
  }
  return worst;
}

std::optional<std::size_t> iterations_to_accuracy(const RunTrace& trace, double eps,
                                                  TargetKind kind) {
  if (kind == TargetKind::LossGap && !trace.reference_loss) {
    throw ConfigError("loss-gap accuracy needs a reference loss in the trace");
  }
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& r = trace.records[k];
    const bool met = kind == TargetKind::GradNormSq ? r.grad_norm_sq <= eps
                                                    : r.loss - *trace.reference_loss <= eps;
    if (met) return k;
  }
  return std::nullopt;
}

std::optional<double> bits_to_accuracy(const RunTrace& trace, double eps, TargetKind kind) {
  const auto k = iterations_to_accuracy(trace, eps, kind);
  if (!k) return std::nullopt;
  return trace.records[*k].cum_cost;
}

std::string metrics_report_json(
    const ImprovementProfile* profile,
    const std::vector<std::pair<std::string, std::optional<double>>>& bits_to_eps) {
  nlohmann::ordered_json j;
  if (profile != nullptr && profile->observations() > 0) {
    auto curve = nlohmann::json::array();
    auto minima = nlohmann::json::array();
    for (std::size_t t = 1; t <= profile->dim(); ++t) {
      curve.push_back(speedup(*profile, t));
      minima.push_back(profile->at(t));
    }
    j["speedup_curve"] = std::move(curve);
    j[std::string(to_string(profile->measure())) + "_profile"] = std::move(minima);
  } else {
    j["speedup_curve"] = nlohmann::json::array();
    j["alpha_profile"] = nlohmann::json::array();
  }
  nlohmann::ordered_json bits = nlohmann::ordered_json::object();
  for (const auto& [name, value] : bits_to_eps) {
    bits[name] = value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
  }
  j["bits_to_eps"] = std::move(bits);
  return j.dump(2);
}

}  // namespace catgrad
