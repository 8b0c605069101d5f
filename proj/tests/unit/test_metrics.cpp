#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "catgrad/error.hpp"
#include "catgrad/metrics.hpp"
#include "catgrad/problems.hpp"

using namespace catgrad;

TEST_CASE("speedup") {
  CHECK(speedup(0.5, 1, 100) == 50.0);
  CHECK(speedup(1.0, 100, 100) == 1.0);
  for (std::size_t t = 1; t <= 16; ++t) CHECK(speedup(t / 16.0, t, 16) == doctest::Approx(1.0));
}

TEST_CASE("improvement profile keeps running minima") {
  ImprovementProfile p(Measure::Alpha, 3);
  CHECK(std::isinf(p.at(1)));
  p.observe(ImprovementCurve(Vector{3, 2, 1}));
  p.observe(ImprovementCurve(Vector{1, 1, 1}));
  CHECK(p.observations() == 2);
  CHECK(p.at(1) == doctest::Approx(1.0 / 3));
  CHECK(p.at(2) == doctest::Approx(2.0 / 3));
  CHECK(p.at(3) == 1.0);
  CHECK(speedup(p, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(p.at(0), InvalidBudget);
  CHECK_THROWS_AS(p.observe(ImprovementCurve(Vector{1, 2})), DimensionMismatch);
}

TEST_CASE("iteration bounds") {
  TheoryParams p;
  p.kappa = 10;
  p.eps0 = 1;
  p.eps = 0.01;
  const double none = theory_iters(ProblemClass::StronglyConvex, Sparsification::Deterministic, p, NoCompression{});
  CHECK(none == doctest::Approx(10 * std::log(100.0)));
  CHECK(none == doctest::Approx(46.05).epsilon(1e-3));
  CHECK(theory_iters(ProblemClass::StronglyConvex, Sparsification::Deterministic, p, WorstCase{8, 8}) == doctest::Approx(none));
  CHECK(theory_iters(ProblemClass::StronglyConvex, Sparsification::Deterministic, p, DataDependent{1.0}) == doctest::Approx(none));
  CHECK(theory_iters(ProblemClass::StronglyConvex, Sparsification::Deterministic, p, DataDependent{0.25}) == doctest::Approx(4 * none));
  CHECK(theory_iters(ProblemClass::StronglyConvex, Sparsification::Deterministic, p, WorstCase{2, 8}) == doctest::Approx(4 * none));

  p.smoothness = 2;
  p.radius = 3;
  CHECK(theory_iters(ProblemClass::Convex, Sparsification::Deterministic, p, NoCompression{}) == doctest::Approx(2 * 2 * 9 / 0.01));
  CHECK(theory_iters(ProblemClass::NonConvex, Sparsification::Deterministic, p, NoCompression{}) == doctest::Approx(2 * 2 * 1 / 0.01));

  p.sigma_sq = 0.5;
  p.mu = 0.2;
  const double a_sc = 10 * std::log(100.0);
  CHECK(theory_iters(ProblemClass::StronglyConvex, Sparsification::Stochastic, p, NoCompression{}) ==
        doctest::Approx(2 * (1 + 2 * 0.5 / (0.2 * 0.01 * 2)) * (a_sc + 10 * std::log(2.0))));
  CHECK(theory_iters(ProblemClass::Convex, Sparsification::Stochastic, p, NoCompression{}) ==
        doctest::Approx(2 * (1 + 2 * 0.5 / (0.01 * 2)) * (2 * 2 * 9 / 0.01)));
  CHECK(theory_iters(ProblemClass::NonConvex, Sparsification::Stochastic, p, NoCompression{}) ==
        doctest::Approx(2 * (1 + 2 * 0.5 / 0.01) * (2 * 2 / 0.01)));

  p.eps = 2;
  CHECK(theory_iters(ProblemClass::StronglyConvex, Sparsification::Deterministic, p, NoCompression{}) == 0.0);
  CHECK(theory_iters(ProblemClass::NonConvex, Sparsification::Deterministic, p, NoCompression{}) == 0.0);
}

TEST_CASE("stochastic step-size helpers") {
  TheoryParams p;
  p.smoothness = 2;
  p.mu = 0.5;
  p.eps = 0.1;
  p.sigma_sq = 0.3;
  CHECK(theory_step_size(ProblemClass::NonConvex, 0.4, p) == doctest::Approx(0.4 / 4 / (6 + 1)));
  CHECK(theory_step_size(ProblemClass::Convex, 0.4, p) == doctest::Approx(0.2 / (6 + 2)));
  CHECK(theory_step_size(ProblemClass::StronglyConvex, 0.4, p) == doctest::Approx(0.2 / (12 + 2)));
  p.sigma_sq = 0;
  CHECK(theory_step_size(ProblemClass::StronglyConvex, 1.0, p) == doctest::Approx(0.25));
}

TEST_CASE("variance estimate") {
  const auto f = Problem::logistic(synthetic_sparse_dataset({40, 10, 3, 1.1, 0.05, 1}), 0.01);
  const Vector x(10, 0.3);
  const std::vector<Problem> same{f, f};
  CHECK(estimate_sigma_sq(f, same, x, 0, 20, 1) == 0.0);
  const auto parts = f.split(4);
  const double s = estimate_sigma_sq(f, parts, x, 2, 100, 1);
  CHECK(s > 0.0);
  CHECK(s == estimate_sigma_sq(f, parts, x, 2, 100, 1));
}

TEST_CASE("accuracy accounting") {
  RunTrace t;
  for (std::size_t i = 0; i < 4; ++i) {
    IterationRecord r;
    r.iter = i;
    r.cum_cost = 10.0 * i;
    r.loss = 1.0 / (1 + i);
    r.grad_norm_sq = 1.0 / std::pow(10.0, static_cast<double>(i));
    t.records.push_back(r);
  }
  CHECK(iterations_to_accuracy(t, 0.02, TargetKind::GradNormSq) == 2u);
  CHECK(bits_to_accuracy(t, 0.02, TargetKind::GradNormSq) == 20.0);
  CHECK(!bits_to_accuracy(t, 1e-9, TargetKind::GradNormSq));
  CHECK_THROWS_AS(bits_to_accuracy(t, 0.1, TargetKind::LossGap), ConfigError);
  t.reference_loss = 0.2;
  CHECK(bits_to_accuracy(t, 0.1, TargetKind::LossGap) == 30.0);
}

TEST_CASE("metrics report") {
  ImprovementProfile p(Measure::Alpha, 2);
  p.observe(ImprovementCurve(Vector{3, 1}));
  const auto j = nlohmann::json::parse(metrics_report_json(&p, {{"cat-sparse", 12.5}, {"full-gd", std::nullopt}}));
  CHECK(j["speedup_curve"].size() == 2);
  CHECK(j["speedup_curve"][0].get<double>() == doctest::Approx(1.8));
  CHECK(j["alpha_profile"][1].get<double>() == 1.0);
  CHECK(j["bits_to_eps"]["cat-sparse"].get<double>() == 12.5);
  CHECK(j["bits_to_eps"]["full-gd"].is_null());
  const auto empty = nlohmann::json::parse(metrics_report_json(nullptr, {}));
  CHECK(empty["speedup_curve"].empty());
}
