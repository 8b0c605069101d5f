#include <doctest.h>

#include <bit>
#include <cmath>
#include <numeric>

#include "catgrad/error.hpp"
#include "catgrad/tuner.hpp"
#include "support.hpp"

using namespace catgrad;
using catgrad::testing::random_dim;
using catgrad::testing::random_gradient;
using catgrad::testing::test_rng;

namespace {

// Best T-subset values by enumerating every subset of a small gradient.
struct SubsetBest {
  std::vector<double> alpha, beta;  // index T
};

SubsetBest subset_oracle(const Vector& g) {
  const std::size_t d = g.size();
  const double total = norm_sq(g);
  SubsetBest out{std::vector<double>(d + 1, 0.0), std::vector<double>(d + 1, 0.0)};
  for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
    const auto t = static_cast<std::size_t>(std::popcount(mask));
    double sq = 0.0, abs = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (mask >> j & 1u) {
        sq += g[j] * g[j];
        abs += std::abs(g[j]);
      }
    }
    out.alpha[t] = std::max(out.alpha[t], sq / total);
    out.beta[t] = std::max(out.beta[t], abs * abs / (static_cast<double>(t) * total));
  }
  return out;
}

// Smallest T whose T largest magnitudes reach ||g||, by trying every T.
std::size_t prefix_oracle(const Vector& g) {
  Vector mags(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) mags[j] = std::abs(g[j]);
  std::sort(mags.rbegin(), mags.rend());
  const double target = norm(g);
  for (std::size_t t = 1; t <= g.size(); ++t) {
    const double s = std::accumulate(mags.begin(), mags.begin() + static_cast<long>(t), 0.0);
    if (s >= target) return t;
  }
  return g.size();
}

}  // namespace

TEST_CASE("alpha and beta on a small gradient") {
  const ImprovementCurve c(Vector{3, 2, 1});
  CHECK(c.alpha(1) == doctest::Approx(9.0 / 14));
  CHECK(c.alpha(2) == doctest::Approx(13.0 / 14));
  CHECK(c.alpha(3) == 1.0);
  CHECK(c.beta(1) == doctest::Approx(9.0 / 14));
  CHECK(c.beta(2) == doctest::Approx(25.0 / 28));
  CHECK(c.beta(3) == doctest::Approx(36.0 / 42));
  CHECK(c.beta(2) > c.beta(3));

  CHECK(ImprovementCurve(Vector{-2, 0, 0}).beta(1) == 1.0);

  const ImprovementCurve flat(Vector{1.5, -1.5, 1.5, 1.5});
  for (std::size_t t = 1; t <= 4; ++t) {
    CHECK(flat.alpha(t) == doctest::Approx(t / 4.0).epsilon(1e-15));
    CHECK(flat.beta(t) == doctest::Approx(t / 4.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(ImprovementCurve(Vector{0, 0}), ZeroGradient);
  CHECK_THROWS_AS(c.alpha(0), InvalidBudget);
  CHECK_THROWS_AS(c.alpha(4), InvalidBudget);
}

TEST_CASE("alpha and beta equal the best subset of each size") {
  auto rng = test_rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = random_dim(rng, 1, 12);
    const Vector g = random_gradient(rng, d);
    const ImprovementCurve c(g);
    const SubsetBest best = subset_oracle(g);
    for (std::size_t t = 1; t <= d; ++t) {
      CHECK(c.alpha(t) == doctest::Approx(best.alpha[t]).epsilon(1e-12));
      CHECK(c.beta(t) == doctest::Approx(best.beta[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("omega at the optimal probabilities") {
  const OmegaValue w = omega(Vector{3, 2, 1}, 2.0);
  CHECK(w.omega == doctest::Approx(7.0 / 9));
  CHECK(w.probabilities.p[1] == doctest::Approx(2.0 / 3));
  CHECK(omega(Vector{3, 2, 1}, 3.0).omega == doctest::Approx(1.0));
  CHECK(ImprovementCurve(Vector{3, 2, 1}).omega(2.0) == doctest::Approx(7.0 / 9));

  auto rng = test_rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = random_dim(rng, 2, 50);
    const Vector g = random_gradient(rng, d);
    const auto t = 1 + rng.below(d);
    const double uniform = omega_for(g, uniform_probabilities(d, static_cast<double>(t)));
    CHECK(uniform == doctest::Approx(static_cast<double>(t) / d).epsilon(1e-12));
    CHECK(omega(g, static_cast<double>(t)).omega >= static_cast<double>(t) / d * (1 - 1e-12));
  }
}

TEST_CASE("optimal probabilities are locally optimal") {
  // Shifting probability mass between any two sampled coordinates never lowers E||Q||^2.
  auto rng = test_rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_dim(rng, 2, 10);
    const Vector g = random_gradient(rng, d);
    const double t = 1.0 + rng.uniform() * static_cast<double>(d - 1);
    const ProbabilityVector p = optimal_probabilities(g, t);
    const double base = expected_sq_norm(g, p);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (i == j || g[i] == 0.0 || g[j] == 0.0) continue;
        for (double delta : {1e-4, 1e-2}) {
          ProbabilityVector q = p;
          q.p[i] += delta;
          q.p[j] -= delta;
          if (q.p[i] > 1.0 || q.p[j] <= 0.0) continue;
          CHECK(expected_sq_norm(g, q) >= base * (1 - 1e-12));
        }
      }
    }
  }
}

TEST_CASE("curve sweeps agree with pointwise values") {
  auto rng = test_rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_dim(rng, 1, 80);
    const Vector g = random_gradient(rng, d);
    const ImprovementCurve c(g);
    for (Measure m : {Measure::Alpha, Measure::Beta, Measure::Omega}) {
      const auto s = c.sweep(m);
      REQUIRE(s.size() == d);
      for (std::size_t t = 1; t <= d; ++t) CHECK(s[t - 1] == doctest::Approx(c.value(m, t)).epsilon(1e-12));
    }
    for (std::size_t t = 1; t <= d; ++t) {
      const double direct = omega(g, static_cast<double>(t)).omega;
      CHECK(c.omega(static_cast<double>(t)) == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("select_t worked examples") {
  const Vector g{3, 2, 1};
  const auto payload = CostModel::payload(CostScheme::Sparse, 3, Precision::Single);
  const auto r = select_t(ImprovementCurve(g), Measure::Alpha, payload);
  CHECK(r.budget == 1);
  CHECK(r.efficiency == doctest::Approx(9.0 / 14 / 34));

  const CostModel packet(PacketRegime{100, 50, 4 * 35}, CostScheme::Sparse, 8, Precision::Single);
  const Vector h{4, 3, 2, 1, 1, 1, 1, 1};
  const auto p = select_t(ImprovementCurve(h), Measure::Alpha, packet);
  CHECK(p.budget == 4);
  CHECK(p.efficiency == doctest::Approx(30.0 / 34 / 150));
  CHECK(p.cost == 150.0);

  const CostModel unit(AffineRegime{1, 0}, CostScheme::Sparse, 8, Precision::Single);
  CHECK(select_t(ImprovementCurve(h), Measure::Alpha, unit).budget == 1);

  const auto w = select_t(ImprovementCurve(g), Measure::Omega, payload);
  REQUIRE(w.probabilities);
  CHECK(w.probabilities->budget == doctest::Approx(static_cast<double>(w.budget)));
}

TEST_CASE("select_t matches brute force on random instances") {
  auto rng = test_rng(59);
  for (int trial = 0; trial < 300; ++trial) {
    const auto d = random_dim(rng, 1, 60);
    const Vector g = random_gradient(rng, d);
    const Precision fpp = rng.below(2) ? Precision::Single : Precision::Double;
    const CostScheme scheme = rng.below(2) ? CostScheme::Sparse : CostScheme::SQ;
    const std::uint64_t entry = index_bits(d) + (scheme == CostScheme::Sparse ? bits_of(fpp) : 0);
    const std::uint64_t floor_bits = entry + (scheme == CostScheme::SQ ? bits_of(fpp) : 0);
    const std::vector<CostModel> models{
        CostModel::payload(scheme, d, fpp),
        CostModel(AffineRegime{0.1 + rng.uniform() * 5, rng.uniform() * 2000}, scheme, d, fpp),
        CostModel(PacketRegime{1 + rng.uniform() * 1000, rng.uniform() * 500, floor_bits + rng.below(600)}, scheme, d, fpp),
    };
    const ImprovementCurve c(g);
    for (const CostModel& model : models) {
      for (Measure m : {Measure::Alpha, Measure::Beta, Measure::Omega}) {
        const auto fast = select_t(c, m, model);
        const auto slow = select_t_bruteforce(g, m, model);
        CHECK(fast.budget == slow.budget);
      }
    }
  }
}

TEST_CASE("alistarh budget") {
  CHECK(alistarh_t(Vector{3, 2, 1}) == 2);
  CHECK(alistarh_t(Vector{0, -7, 0, 0}) == 1);
  CHECK(alistarh_t(Vector{2, 2, 2, 2}) == 2);
  CHECK_THROWS_AS(alistarh_t(Vector{0, 0}), ZeroGradient);
  auto rng = test_rng(61);
  for (int trial = 0; trial < 300; ++trial) {
    const Vector g = random_gradient(rng, random_dim(rng, 1, 100));
    CHECK(alistarh_t(g) == prefix_oracle(g));
  }
}
