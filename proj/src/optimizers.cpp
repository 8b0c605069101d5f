#include "catgrad/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "catgrad/error.hpp"
#include "catgrad/transport.hpp"

namespace catgrad {

Measure measure_for(Compressor c) {
  switch (c) {
    case Compressor::SQ:
      return Measure::Beta;
    case Compressor::Stochastic:
      return Measure::Omega;
    case Compressor::Dense:
    case Compressor::TopT:
      return Measure::Alpha;
  }
  return Measure::Alpha;
}

CostScheme cost_scheme_for(Compressor c) {
  return c == Compressor::SQ ? CostScheme::SQ : CostScheme::Sparse;
}

double descent_step_size(Compressor c, double measure, std::size_t budget, double smoothness) {
  switch (c) {
    case Compressor::Dense:
    case Compressor::TopT:
      return 1.0 / smoothness;
    case Compressor::SQ:
      return std::sqrt(measure) / (std::sqrt(static_cast<double>(budget)) * smoothness);
    case Compressor::Stochastic:
      return measure / smoothness;
  }
  return 0.0;
}

namespace {

Vector move_against(std::span<const double> x, double gamma, std::span<const double> direction) {
  Vector next(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) next[j] = x[j] - gamma * direction[j];
  return next;
}

std::uint64_t message_bits(const CostModel& model, const CompressedGradient& c) {
  const CostScheme s = scheme_of(c) == PayloadScheme::SQ ? CostScheme::SQ : CostScheme::Sparse;
  return model.with_scheme(s).payload_bits(entry_count(c));
}

}  // namespace

Step compressed_step(std::span<const double> x, const ImprovementCurve& curve, Compressor c,
                     std::size_t budget, double smoothness, const CostModel& model,
                     CounterRng* rng, std::optional<double> step_override) {
  require_same_size(curve.dim(), x.size(), "compressed_step");
  const std::span<const double> g = curve.gradient();
  if (c == Compressor::Dense) return dense_step(x, g, smoothness, model, step_override);

  Step s;
  s.budget = budget;
  switch (c) {
    case Compressor::TopT:
      s.message = top_t_sparsify(g, budget);
      s.measure = curve.alpha(budget);
      break;
    case Compressor::SQ:
      s.message = sparsify_quantize(g, budget);
      s.measure = curve.beta(budget);
      break;
    case Compressor::Stochastic: {
      if (rng == nullptr) throw ConfigError("stochastic sparsification needs a random source");
      const ProbabilityVector p = curve.probabilities(static_cast<double>(budget));
      s.message = stochastic_sparsify(g, p, *rng);
      s.measure = curve.omega(static_cast<double>(budget));
      break;
    }
    case Compressor::Dense:
      break;
  }
  s.step_size = step_override.value_or(descent_step_size(c, s.measure, budget, smoothness));
  s.next = move_against(x, s.step_size, to_dense(s.message));
  s.cost = message_cost(model, s.message);
  s.payload_bits = message_bits(model, s.message);
  return s;
}

Step dense_step(std::span<const double> x, std::span<const double> g, double smoothness,
                const CostModel& model, std::optional<double> step_override) {
  require_same_size(g.size(), x.size(), "dense_step");
  Step s;
  s.budget = g.size();
  s.measure = 1.0;
  s.step_size = step_override.value_or(1.0 / smoothness);
  s.next = move_against(x, s.step_size, g);
  s.cost = model.dense_cost();
  s.payload_bits = model.dense_payload_bits();
  SparseGradient all{g.size(), {}, SparseKind::TopT};
  for (std::uint32_t j = 0; j < g.size(); ++j) {
    if (g[j] != 0.0) all.entries.push_back({j, g[j]});
  }
  s.message = std::move(all);
  return s;
}

Step cat_sparse_step(std::span<const double> x, const Problem& problem, const CostModel& model) {
  const ImprovementCurve curve(problem.gradient(x));
  const CostModel m = model.with_scheme(CostScheme::Sparse);
  const TunerResult r = select_t(curve, Measure::Alpha, m);
  return compressed_step(x, curve, Compressor::TopT, r.budget, problem.smoothness(), m);
}

Step cat_sq_step(std::span<const double> x, const Problem& problem, const CostModel& model) {
  const ImprovementCurve curve(problem.gradient(x));
  const CostModel m = model.with_scheme(CostScheme::SQ);
  const TunerResult r = select_t(curve, Measure::Beta, m);
  return compressed_step(x, curve, Compressor::SQ, r.budget, problem.smoothness(), m);
}

Step cat_ss_step(std::span<const double> x, const Problem& problem, const CostModel& model,
                 CounterRng& rng, std::optional<double> step_override) {
  const ImprovementCurve curve(problem.gradient(x));
  const CostModel m = model.with_scheme(CostScheme::Sparse);
  const TunerResult r = select_t(curve, Measure::Omega, m);
  return compressed_step(x, curve, Compressor::Stochastic, r.budget, problem.smoothness(), m, &rng,
                         step_override);
}

Step alistarh_sq_step(std::span<const double> x, const Problem& problem, const CostModel& model) {
  const ImprovementCurve curve(problem.gradient(x));
  return compressed_step(x, curve, Compressor::SQ, alistarh_t(curve), problem.smoothness(),
                         model.with_scheme(CostScheme::SQ));
}

double aggregate_omega(std::span<const double> omegas) {
  const double n = static_cast<double>(omegas.size());
  double inv = 0.0;
  for (double w : omegas) {
    if (std::isinf(w)) continue;
    inv += 1.0 / (n * w);
  }
  return inv > 0.0 ? 1.0 / inv : 1.0;
}

namespace {

Vector worker_gradient(const Worker& w, std::span<const double> x, std::uint32_t iteration,
                       std::uint64_t seed) {
  const Problem& p = *w.objective;
  const std::size_t n = p.samples();
  if (p.kind() != Problem::Kind::Logistic || w.batch_size == 0 || w.batch_size >= n) {
    return p.gradient(x);
  }
  CounterRng rng(seed, iteration, w.stream, CounterRng::Purpose::Minibatch);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  for (std::size_t i = 0; i < w.batch_size; ++i) std::swap(rows[i], rows[i + rng.below(n - i)]);
  rows.resize(w.batch_size);
  std::sort(rows.begin(), rows.end());
  return p.gradient_rows(x, rows);
}

}  // namespace

MultinodeStep multinode_step(std::span<const double> x, std::span<const Worker> workers,
                             std::uint32_t iteration, const MultinodeOptions& options) {
  if (workers.empty()) throw ConfigError("multinode_step needs at least one worker");
  if (workers.size() > 0xffff) throw ConfigError("at most 65535 workers fit in a frame header");
  const std::size_t d = x.size();
  const CostModel model = options.model.with_scheme(CostScheme::Sparse);
  require_same_size(model.dim(), d, "multinode_step");

  MultinodeStep out;
  std::vector<CompressedGradient> parts;
  std::vector<Frame> frames;
  for (std::size_t j = 0; j < workers.size(); ++j) {
    const Worker& w = workers[j];
    if (w.objective == nullptr) throw ConfigError("worker without an objective");
    const Vector g = worker_gradient(w, x, iteration, options.seed);
    CompressedGradient msg = SparseGradient{d, {}, SparseKind::Stochastic};
    if (norm_sq(g) == 0.0) {
      out.budgets.push_back(0);
      out.omegas.push_back(std::numeric_limits<double>::infinity());
    } else {
      const ImprovementCurve curve(g);
      const TunerResult r = select_t(curve, Measure::Omega, model);
      CounterRng rng(options.seed, iteration, w.stream, CounterRng::Purpose::Sparsify);
      msg = stochastic_sparsify(g, *r.probabilities, rng);
      out.budgets.push_back(r.budget);
      out.omegas.push_back(r.improvement);
    }
    msg = round_to_precision(std::move(msg), model.fpp());
    if (options.via_transport) {
      frames.push_back(frame_encode(
          {iteration, static_cast<std::uint16_t>(j), model.fpp(), std::move(msg)}));
    } else {
      out.cost += message_cost(model, msg);
      out.payload_bits += message_bits(model, msg);
      parts.push_back(std::move(msg));
    }
  }

  Vector aggregate;
  if (options.via_transport) {
    RoundResult round = simulate_round({iteration, d, workers.size()}, frames, model);
    aggregate = std::move(round.aggregate);
    out.cost = round.cost;
    out.payload_bits = round.payload_bits;
  } else {
    aggregate = average(parts, d);
  }

  out.aggregate_omega = aggregate_omega(out.omegas);
  const double w = options.omega_bar.value_or(out.aggregate_omega);
  out.step_size = options.step_override.value_or(w / (2.0 * options.smoothness));
  out.next = move_against(x, out.step_size, aggregate);
  return out;
}

std::string to_string(const SchemeConfig& s) {
  struct Visitor {
    std::string operator()(const FullGd&) const { return "full-gd"; }
    std::string operator()(const FixedBudget& f) const {
      return "fixed-t:T=" + std::to_string(f.budget);
    }
    std::string operator()(const CatSparse&) const { return "cat-sparse"; }
    std::string operator()(const CatSQ&) const { return "cat-sq"; }
    std::string operator()(const CatStochastic&) const { return "cat-ss"; }
    std::string operator()(const AlistarhSQ&) const { return "alistarh-sq"; }
    std::string operator()(const Hybrid& h) const {
      const char* base = h.base == Compressor::SQ           ? "cat-sq"
                         : h.base == Compressor::Stochastic ? "cat-ss"
                                                            : "cat-sparse";
      return "hybrid:S=" + std::to_string(h.period) + ",base=" + base;
    }
  };
  return std::visit(Visitor{}, s);
}

Vector default_start(const Problem& problem, std::uint64_t seed) {
  Vector x(problem.dim(), 0.0);
  if (problem.kind() == Problem::Kind::Logistic) return x;
  CounterRng rng(seed, 0, 0, CounterRng::Purpose::Init);
  for (double& e : x) e = rng.normal();
  return x;
}

ReferenceSolution reference_solution(const Problem& problem, double grad_tol, std::size_t max_iters) {
  const double L = problem.smoothness();
  const double momentum = problem.strong_convexity()
                              ? (std::sqrt(L / *problem.strong_convexity()) - 1.0) /
                                    (std::sqrt(L / *problem.strong_convexity()) + 1.0)
                              : -1.0;
  Vector x = default_start(problem, 0);
  Vector y = x;
  ReferenceSolution best{x, problem.loss(x)};
  double t = 1.0;
  double prev_loss = best.loss;
  for (std::size_t k = 0; k < max_iters; ++k) {
    const Vector g = problem.gradient(y);
    if (norm_sq(g) <= grad_tol) {
      if (const double f = problem.loss(y); f < best.loss) best = {y, f};
      break;
    }
    Vector next = move_against(y, 1.0 / L, g);
    const double f = problem.loss(next);
    if (f < best.loss) best = {next, f};
    double beta;
    if (momentum >= 0.0) {
      beta = momentum;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      beta = (t - 1.0) / t_next;
      t = t_next;
    }
    if (f > prev_loss) {
      // Function-value restart.
      beta = 0.0;
      t = 1.0;
    }
    prev_loss = f;
    for (std::size_t j = 0; j < x.size(); ++j) y[j] = next[j] + beta * (next[j] - x[j]);
    x = std::move(next);
  }
  return best;
}

double reference_loss(const Problem& problem, double grad_tol, std::size_t max_iters) {
  return reference_solution(problem, grad_tol, max_iters).loss;
}

namespace {

struct SchemeTraits {
  Compressor compressor;
  bool stochastic;
};

SchemeTraits traits_of(const SchemeConfig& s) {
  if (std::holds_alternative<FullGd>(s)) return {Compressor::Dense, false};
  if (std::holds_alternative<CatSQ>(s) || std::holds_alternative<AlistarhSQ>(s)) {
    return {Compressor::SQ, false};
  }
  if (std::holds_alternative<CatStochastic>(s)) return {Compressor::Stochastic, true};
  if (const auto* h = std::get_if<Hybrid>(&s)) {
    return {h->base, h->base == Compressor::Stochastic};
  }
  return {Compressor::TopT, false};
}

bool target_met(const Target& target, double loss, double grad_norm_sq,
                std::optional<double> reference) {
  if (const auto* g = std::get_if<GradNormTarget>(&target)) return grad_norm_sq <= g->eps;
  return loss - *reference <= std::get<LossGapTarget>(target).eps;
}

}  // namespace

RunResult run(const OptimizerConfig& config, const Problem& problem) {
  const std::size_t d = problem.dim();
  const SchemeTraits traits = traits_of(config.scheme);
  const CostModel model = config.cost.bind(d, cost_scheme_for(traits.compressor), config.fpp);
  const std::optional<double> step_override =
      std::holds_alternative<ManualStep>(config.step)
          ? std::optional<double>(std::get<ManualStep>(config.step).gamma)
          : std::nullopt;
  if (step_override && !(*step_override > 0.0)) throw ConfigError("manual step size must be > 0");
  if (config.workers == 0) throw ConfigError("need at least one worker");
  if (const auto* h = std::get_if<Hybrid>(&config.scheme);
      h && (h->period == 0 || h->base == Compressor::Dense)) {
    throw ConfigError("hybrid schedule needs a period >= 1 and a compressed base scheme");
  }
  if (const auto* f = std::get_if<FixedBudget>(&config.scheme)) check_budget(f->budget, d);
  std::visit([](const auto& t) {
    if (!(t.eps > 0.0)) throw ConfigError("target eps must be positive");
  }, config.target);

  const bool multinode = config.workers > 1 || config.batch_size > 0;
  if (multinode && !std::holds_alternative<CatStochastic>(config.scheme)) {
    throw ConfigError("multiple workers and minibatches require the cat-ss scheme");
  }

  RunResult result;
  RunTrace& trace = result.trace;
  if (const auto* gap = std::get_if<LossGapTarget>(&config.target)) {
    trace.reference_loss = gap->reference_loss ? *gap->reference_loss : reference_loss(problem);
  }

  Vector x = config.x0.empty() ? default_start(problem, config.seed) : config.x0;
  require_same_size(d, x.size(), "x0");

  if (config.track_profile && !multinode) {
    result.profile.emplace(measure_for(traits.compressor), d);
  }

  std::vector<Problem> locals;
  std::vector<Worker> workers;
  double worker_smoothness = problem.smoothness();
  if (multinode) {
    locals = problem.split(config.workers);
    worker_smoothness = 0.0;
    for (std::size_t j = 0; j < locals.size(); ++j) {
      worker_smoothness = std::max(worker_smoothness, locals[j].smoothness());
    }
    for (std::size_t j = 0; j < locals.size(); ++j) {
      workers.push_back({&locals[j], config.batch_size, j});
    }
  }

  double cum_cost = 0.0;
  std::uint64_t cum_bits = 0;
  std::optional<std::size_t> held_budget;
  std::size_t increases = 0;
  double prev_loss = std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0;; ++iter) {
    IterationRecord rec;
    rec.iter = iter;
    rec.cum_cost = cum_cost;
    rec.cum_bits = cum_bits;
    rec.loss = problem.loss(x);
    const Vector g = problem.gradient(x);
    rec.grad_norm_sq = norm_sq(g);

    if (!step_override && std::isfinite(prev_loss)) {
      increases = rec.loss > prev_loss ? increases + 1 : 0;
    }
    prev_loss = rec.loss;

    if (!std::isfinite(rec.loss) || increases >= config.divergence_window) {
      trace.records.push_back(rec);
      trace.status = RunStatus::Diverged;
      std::ostringstream os;
      os << "loss increased for " << increases << " consecutive iterations at iteration " << iter
         << "; the smoothness constant L=" << problem.smoothness() << " is likely underestimated";
      trace.message = os.str();
      break;
    }
    if (target_met(config.target, rec.loss, rec.grad_norm_sq, trace.reference_loss)) {
      trace.records.push_back(rec);
      trace.status = RunStatus::TargetReached;
      break;
    }
    if (iter >= config.max_iters) {
      trace.records.push_back(rec);
      trace.status = RunStatus::MaxIterations;
      break;
    }

    if (multinode) {
      MultinodeOptions opts{model, config.seed, worker_smoothness, step_override, config.omega_bar,
                            config.via_transport};
      MultinodeStep s = multinode_step(x, workers, static_cast<std::uint32_t>(iter), opts);
      rec.budgets = s.budgets;
      rec.measure = s.aggregate_omega;
      rec.step_size = s.step_size;
      cum_cost += s.cost;
      cum_bits += s.payload_bits;
      trace.records.push_back(std::move(rec));
      x = std::move(s.next);
      continue;
    }

    if (rec.grad_norm_sq == 0.0) {
      trace.records.push_back(rec);
      trace.status = RunStatus::Converged;
      break;
    }

    const ImprovementCurve curve(g);
    if (result.profile) result.profile->observe(curve);
    const double L = problem.smoothness();
    const CostModel m = model.with_scheme(cost_scheme_for(traits.compressor));
    CounterRng rng(config.seed, iter, 0, CounterRng::Purpose::Sparsify);

    std::size_t budget = d;
    if (const auto* f = std::get_if<FixedBudget>(&config.scheme)) {
      budget = f->budget;
    } else if (std::holds_alternative<AlistarhSQ>(config.scheme)) {
      budget = alistarh_t(curve);
    } else if (const auto* h = std::get_if<Hybrid>(&config.scheme)) {
      if (iter % h->period == 0 || !held_budget) {
        held_budget = select_t(curve, measure_for(h->base), m).budget;
      }
      budget = *held_budget;
    } else if (!std::holds_alternative<FullGd>(config.scheme)) {
      budget = select_t(curve, measure_for(traits.compressor), m).budget;
    }

    Step s = compressed_step(x, curve, traits.compressor, budget, L, m,
                             traits.stochastic ? &rng : nullptr, step_override);
    rec.budgets = {s.budget};
    rec.measure = s.measure;
    rec.step_size = s.step_size;
    cum_cost += s.cost;
    cum_bits += s.payload_bits;
    trace.records.push_back(std::move(rec));
    x = std::move(s.next);
  }

  result.x = std::move(x);
  return result;
}

}  // namespace catgrad
