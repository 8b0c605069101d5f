#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <Eigen/Dense>
#include <zlib.h>

#include "catgrad/error.hpp"
#include "catgrad/problems.hpp"
#include "support.hpp"

using namespace catgrad;
using catgrad::testing::test_rng;

namespace {

Dataset random_dataset(CounterRng& rng, std::size_t n, std::size_t d, double density) {
  Dataset ds{SparseMatrix(d), {}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint32_t> idx;
    Vector val;
    for (std::uint32_t j = 0; j < d; ++j) {
      if (rng.uniform() < density) {
        idx.push_back(j);
        val.push_back(rng.normal());
      }
    }
    ds.features.add_row(idx, val);
    ds.labels.push_back(rng.below(2) ? 1.0 : -1.0);
  }
  return ds;
}

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << contents;
  return path;
}

}  // namespace

TEST_CASE("quadratic gradients") {
  const auto r1 = Problem::rank_one_quadratic(1.0, 4);
  const Vector g = r1.gradient(Vector{1, 2, 3, 4});
  for (double v : g) CHECK(v == doctest::Approx(2.5));
  CHECK(r1.loss(Vector{1, 2, 3, 4}) == doctest::Approx(0.5 * 10 * 10 / 4));

  const auto iso = Problem::isotropic_quadratic(2.0, 3);
  CHECK(iso.gradient(Vector{1, -1, 0.5}) == Vector{2, -2, 1});
  CHECK(iso.gradient(Vector{0, 0, 0}) == Vector{0, 0, 0});
  CHECK(iso.loss(Vector{1, -1, 0.5}) == doctest::Approx(2.25));
  CHECK_THROWS_AS(iso.gradient(Vector{1, 2}), DimensionMismatch);

  const auto q = Problem::quadratic({2, 1, 1, 2}, 2, 3.0, 1.0);
  CHECK(q.gradient(Vector{1, 0}) == Vector{2, 1});
  CHECK(q.loss(Vector{1, 1}) == doctest::Approx(3.0));
}

TEST_CASE("logistic smoothness constant") {
  Dataset eye{SparseMatrix::from_dense(2, 2, Vector{1, 0, 0, 1}), {1, -1}};
  CHECK(Problem::logistic(eye, 0.0).smoothness() == doctest::Approx(1.0 / 8).epsilon(1e-6));

  Dataset empty{SparseMatrix(3), {}};
  empty.features.add_row({}, {});
  empty.labels.push_back(1.0);
  const auto reg_only = Problem::logistic(empty, 0.25);
  CHECK(reg_only.smoothness() == 0.25);
  CHECK(reg_only.strong_convexity() == 0.25);
}

TEST_CASE("power iteration agrees with a dense eigensolver") {
  auto rng = test_rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + rng.below(40), d = 2 + rng.below(30);
    const Dataset ds = random_dataset(rng, n, d, 0.3);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<long>(n), static_cast<long>(d));
    for (std::size_t r = 0; r < n; ++r) {
      const auto idx = ds.features.row_indices(r);
      const auto val = ds.features.row_values(r);
      for (std::size_t k = 0; k < idx.size(); ++k) x(static_cast<long>(r), idx[k]) = val[k];
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x);
    const double want = eig.eigenvalues().maxCoeff();
    const double got = gram_max_eigenvalue(ds.features, 1e-10, 100000).eigenvalue;
    CHECK(got == doctest::Approx(want).epsilon(1e-4));
  }
}

TEST_CASE("power iteration reports the last estimate on failure") {
  const auto x = SparseMatrix::from_dense(2, 2, Vector{1, 0, 0, 0.999999});
  try {
    gram_max_eigenvalue(x, 1e-15, 3);
    FAIL("expected EstimationError");
  } catch (const EstimationError& e) {
    CHECK(e.last_estimate() > 0.9);
  }
}

TEST_CASE("logistic gradient matches central differences") {
  auto rng = test_rng(73);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng.below(20), d = 2 + rng.below(10);
    const auto p = Problem::logistic(random_dataset(rng, n, d, 0.5), rng.uniform() * 0.1);
    Vector x(d);
    for (double& v : x) v = rng.normal();
    const Vector g = p.gradient(x);
    for (std::size_t j = 0; j < d; ++j) {
      Vector a = x, b = x;
      a[j] += 1e-6;
      b[j] -= 1e-6;
      const double fd = (p.loss(a) - p.loss(b)) / 2e-6;
      CHECK(std::abs(fd - g[j]) <= 1e-5 * std::max(1.0, std::abs(g[j])));
    }
  }
}

TEST_CASE("logistic gradient is L-Lipschitz") {
  auto rng = test_rng(79);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + rng.below(30), d = 2 + rng.below(15);
    const auto p = Problem::logistic(random_dataset(rng, n, d, 0.4), 0.01);
    for (int k = 0; k < 20; ++k) {
      Vector x(d), y(d);
      for (std::size_t j = 0; j < d; ++j) {
        x[j] = 3 * rng.normal();
        y[j] = x[j] + 0.1 * rng.normal();
      }
      Vector diff = p.gradient(x);
      axpy(-1.0, p.gradient(y), diff);
      Vector dx = x;
      axpy(-1.0, y, dx);
      CHECK(norm(diff) <= p.smoothness() * norm(dx) * (1 + 1e-6));
    }
  }
}

TEST_CASE("row-subset gradients and splits average to the full gradient") {
  auto rng = test_rng(83);
  const auto p = Problem::logistic(random_dataset(rng, 12, 6, 0.5), 0.05);
  Vector x(6);
  for (double& v : x) v = rng.normal();
  const Vector full = p.gradient(x);
  std::vector<std::size_t> all(12);
  std::iota(all.begin(), all.end(), 0);
  const Vector rows = p.gradient_rows(x, all);
  for (std::size_t j = 0; j < 6; ++j) CHECK(rows[j] == doctest::Approx(full[j]).epsilon(1e-12));

  const auto parts = p.split(4);
  REQUIRE(parts.size() == 4);
  Vector avg(6, 0.0);
  for (const auto& part : parts) {
    axpy(0.25, part.gradient(x), avg);
    CHECK(part.smoothness() > 0.0);
  }
  for (std::size_t j = 0; j < 6; ++j) CHECK(avg[j] == doctest::Approx(full[j]).epsilon(1e-12));
  CHECK_THROWS_AS(p.split(5), ConfigError);
}

TEST_CASE("libsvm reader") {
  const auto path = temp_file("catgrad_ok.svm", "+1 1:0.5 3:2\n-1 2:1\n\n0 1:1 4:-1\n1 3:0.25\n");
  const Dataset ds = load_libsvm(path.string());
  CHECK(ds.samples() == 4);
  CHECK(ds.features.cols() == 4);
  CHECK(ds.labels == Vector{1, -1, -1, 1});
  CHECK(ds.features.row_dot(0, Vector{1, 1, 1, 1}) == 2.5);
  CHECK(load_libsvm(path.string(), 10).features.cols() == 10);
  CHECK_THROWS_AS(load_libsvm(path.string(), 2), ParseError);
}

TEST_CASE("libsvm reader handles gzip input") {
  const auto path = std::filesystem::temp_directory_path() / "catgrad_ok.svm.gz";
  const std::string text = "1 1:1 2:2\n-1 2:-1\n";
  gzFile f = gzopen(path.string().c_str(), "wb");
  REQUIRE(f != nullptr);
  gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
  gzclose(f);
  const Dataset ds = load_libsvm(path.string());
  CHECK(ds.samples() == 2);
  CHECK(ds.features.cols() == 2);
}

TEST_CASE("libsvm reader reports the failing line") {
  const auto check_error = [](const std::string& contents, const std::string& needle) {
    const auto path = temp_file("catgrad_bad.svm", contents);
    try {
      load_libsvm(path.string());
      FAIL("expected ParseError for: " << contents);
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  check_error("1 1:1\n2 1:1\n", ":2:");
  check_error("1 1:1\n-1 0:1\n", ":2:");
  check_error("1 1:x\n", ":1:");
  check_error("1 1:1 1:2\n", ":1:");
  check_error("1 3\n", ":1:");
  CHECK_THROWS_AS(load_libsvm("/nonexistent/catgrad.svm"), Error);
}

TEST_CASE("synthetic sparse design") {
  SyntheticSpec spec;
  spec.samples = 200;
  spec.features = 100;
  spec.nnz_per_row = 5;
  const Dataset a = synthetic_sparse_dataset(spec);
  const Dataset b = synthetic_sparse_dataset(spec);
  CHECK(a.samples() == 200);
  CHECK(a.features.cols() == 100);
  CHECK(a.labels == b.labels);
  for (std::size_t r = 0; r < a.samples(); ++r) {
    const auto v = a.features.row_values(r);
    CHECK(v.size() <= 5);
    CHECK(norm_sq(v) == doctest::Approx(1.0));
  }
  spec.seed = 2;
  CHECK(synthetic_sparse_dataset(spec).labels != a.labels);
}
