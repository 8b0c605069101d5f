#include "catgrad/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "catgrad/error.hpp"
#include "catgrad/random.hpp"

namespace catgrad {

void SparseMatrix::add_row(std::span<const std::uint32_t> cols, std::span<const double> vals) {
  require_same_size(cols.size(), vals.size(), "add_row");
  std::int64_t prev = -1;
  for (std::uint32_t c : cols) {
    if (c >= cols_ || static_cast<std::int64_t>(c) <= prev) {
      throw Error("sparse row indices must be increasing and below the column count");
    }
    prev = c;
  }
  col_idx_.insert(col_idx_.end(), cols.begin(), cols.end());
  values_.insert(values_.end(), vals.begin(), vals.end());
  row_ptr_.push_back(values_.size());
}

void SparseMatrix::resize_cols(std::size_t cols) {
  if (cols < cols_) throw Error("resize_cols cannot shrink a matrix");
  cols_ = cols;
}

std::span<const std::uint32_t> SparseMatrix::row_indices(std::size_t r) const {
  return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
}

std::span<const double> SparseMatrix::row_values(std::size_t r) const {
  return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
}

double SparseMatrix::row_dot(std::size_t r, std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k] * x[col_idx_[k]];
  return s;
}

void SparseMatrix::add_row_to(std::size_t r, double a, std::span<double> y) const {
  for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) y[col_idx_[k]] += a * values_[k];
}

Vector SparseMatrix::multiply(std::span<const double> x) const {
  require_same_size(cols_, x.size(), "multiply");
  Vector y(rows());
  for (std::size_t r = 0; r < rows(); ++r) y[r] = row_dot(r, x);
  return y;
}

Vector SparseMatrix::multiply_transpose(std::span<const double> y) const {
  require_same_size(rows(), y.size(), "multiply_transpose");
  Vector x(cols_, 0.0);
  for (std::size_t r = 0; r < rows(); ++r) add_row_to(r, y[r], x);
  return x;
}

SparseMatrix SparseMatrix::select_rows(std::span<const std::size_t> rows) const {
  SparseMatrix out(cols_);
  for (std::size_t r : rows) out.add_row(row_indices(r), row_values(r));
  return out;
}

SparseMatrix SparseMatrix::from_dense(std::size_t rows, std::size_t cols,
                                      std::span<const double> a) {
  require_same_size(rows * cols, a.size(), "from_dense");
  SparseMatrix out(cols);
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (std::size_t r = 0; r < rows; ++r) {
    idx.clear();
    val.clear();
    for (std::uint32_t c = 0; c < cols; ++c) {
      if (a[r * cols + c] != 0.0) {
        idx.push_back(c);
        val.push_back(a[r * cols + c]);
      }
    }
    out.add_row(idx, val);
  }
  return out;
}

Dataset Dataset::select(std::span<const std::size_t> rows) const {
  Dataset out{features.select_rows(rows), {}};
  for (std::size_t r : rows) out.labels.push_back(labels[r]);
  return out;
}

Dataset synthetic_sparse_dataset(const SyntheticSpec& spec) {
  if (spec.samples == 0 || spec.features == 0 || spec.nnz_per_row == 0 ||
      spec.nnz_per_row > spec.features) {
    throw ConfigError("synthetic dataset needs samples, features >= nnz_per_row >= 1");
  }
  CounterRng rng(spec.seed, 0, 0, CounterRng::Purpose::Init);

  std::vector<double> cdf(spec.features);
  double acc = 0.0;
  for (std::size_t j = 0; j < spec.features; ++j) {
    acc += std::pow(static_cast<double>(j + 1), -spec.zipf);
    cdf[j] = acc;
  }
  for (double& c : cdf) c /= acc;

  Vector planted(spec.features);
  for (double& w : planted) w = rng.normal();

  Dataset data{SparseMatrix(spec.features), {}};
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (std::size_t i = 0; i < spec.samples; ++i) {
    idx.clear();
    while (idx.size() < spec.nnz_per_row) {
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), rng.uniform());
      const auto j = static_cast<std::uint32_t>(
          std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(spec.features - 1)));
      if (std::find(idx.begin(), idx.end(), j) == idx.end()) idx.push_back(j);
    }
    std::sort(idx.begin(), idx.end());
    val.assign(idx.size(), 0.0);
    double nrm = 0.0;
    for (double& v : val) {
      v = 0.5 + rng.uniform();
      nrm += v * v;
    }
    nrm = std::sqrt(nrm);
    double margin = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      val[k] /= nrm;
      margin += val[k] * planted[idx[k]];
    }
    double label = margin >= 0.0 ? 1.0 : -1.0;
    if (rng.uniform() < spec.label_noise) label = -label;
    data.features.add_row(idx, val);
    data.labels.push_back(label);
  }
  return data;
}

PowerIteration gram_max_eigenvalue(const SparseMatrix& x, double tolerance,
                                   std::size_t max_iterations) {
  const std::size_t d = x.cols();
  if (d == 0) return {};
  // seeded random start
  CounterRng rng(0x5eedULL, 0, 0, CounterRng::Purpose::Init);
  Vector v(d);
  for (double& e : v) e = 1.0 + rng.uniform();
  double nv = norm(v);
  for (double& e : v) e /= nv;

  double lambda = 0.0;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    Vector w = x.multiply_transpose(x.multiply(v));
    const double next = dot(v, w);
    const double nw = norm(w);
    if (nw == 0.0) return {0.0, it};
    for (std::size_t j = 0; j < d; ++j) v[j] = w[j] / nw;
    if (it > 1 && std::abs(next - lambda) <= tolerance * std::abs(next)) return {next, it};
    lambda = next;
  }
  throw EstimationError("power iteration did not converge in " + std::to_string(max_iterations) +
                            " iterations",
                        lambda);
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// 1 / (1 + exp(-z)).
double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Problem Problem::logistic(Dataset data, double reg) {
  if (data.samples() == 0) throw ConfigError("logistic problem needs at least one sample");
  if (data.features.rows() != data.samples()) throw ConfigError("label count must match rows");
  if (reg < 0.0) throw ConfigError("regularisation must be non-negative");
  Problem p;
  p.kind_ = Kind::Logistic;
  p.dim_ = data.features.cols();
  p.reg_ = reg;
  const double lambda = gram_max_eigenvalue(data.features).eigenvalue;
  p.smoothness_ = lambda / (4.0 * static_cast<double>(data.samples())) + reg;
  if (!(p.smoothness_ > 0.0)) throw ConfigError("logistic problem has zero smoothness constant");
  if (reg > 0.0) p.mu_ = reg;
  p.data_ = std::move(data);
  return p;
}

Problem Problem::isotropic_quadratic(double smoothness, std::size_t dim) {
  if (!(smoothness > 0.0) || dim == 0) throw ConfigError("quadratic needs L > 0 and d >= 1");
  Problem p;
  p.kind_ = Kind::IsotropicQuadratic;
  p.dim_ = dim;
  p.smoothness_ = smoothness;
  p.mu_ = smoothness;
  return p;
}

Problem Problem::rank_one_quadratic(double smoothness, std::size_t dim) {
  if (!(smoothness > 0.0) || dim == 0) throw ConfigError("quadratic needs L > 0 and d >= 1");
  Problem p;
  p.kind_ = Kind::RankOneQuadratic;
  p.dim_ = dim;
  p.smoothness_ = smoothness;
  return p;
}

Problem Problem::quadratic(Vector a, std::size_t dim, double smoothness,
                           std::optional<double> strong_convexity) {
  require_same_size(dim * dim, a.size(), "quadratic");
  if (!(smoothness > 0.0) || dim == 0) throw ConfigError("quadratic needs L > 0 and d >= 1");
  Problem p;
  p.kind_ = Kind::Quadratic;
  p.dim_ = dim;
  p.smoothness_ = smoothness;
  p.mu_ = strong_convexity;
  p.matrix_ = std::move(a);
  return p;
}

std::size_t Problem::samples() const noexcept { return data_ ? data_->samples() : 1; }

double Problem::loss(std::span<const double> x) const {
  require_same_size(dim_, x.size(), "loss");
  switch (kind_) {
    case Kind::IsotropicQuadratic:
      return 0.5 * smoothness_ * norm_sq(x);
    case Kind::RankOneQuadratic: {
      const double s = std::accumulate(x.begin(), x.end(), 0.0);
      return 0.5 * smoothness_ / static_cast<double>(dim_) * s * s;
    }
    case Kind::Quadratic: {
      double f = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) {
        f += x[i] * dot(std::span<const double>(matrix_).subspan(i * dim_, dim_), x);
      }
      return 0.5 * f;
    }
    case Kind::Logistic: {
      const auto& X = data_->features;
      double f = 0.0;
      for (std::size_t i = 0; i < X.rows(); ++i) f += softplus(-data_->labels[i] * X.row_dot(i, x));
      return f / static_cast<double>(X.rows()) + 0.5 * reg_ * norm_sq(x);
    }
  }
  return 0.0;
}

Vector Problem::gradient(std::span<const double> x) const {
  require_same_size(dim_, x.size(), "gradient");
  switch (kind_) {
    case Kind::IsotropicQuadratic: {
      Vector g(x.begin(), x.end());
      for (double& e : g) e *= smoothness_;
      return g;
    }
    case Kind::RankOneQuadratic: {
      const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(dim_);
      return Vector(dim_, smoothness_ * mean);
    }
    case Kind::Quadratic: {
      Vector g(dim_);
      for (std::size_t i = 0; i < dim_; ++i) {
        g[i] = dot(std::span<const double>(matrix_).subspan(i * dim_, dim_), x);
      }
      return g;
    }
    case Kind::Logistic: {
      std::vector<std::size_t> all(data_->samples());
      std::iota(all.begin(), all.end(), std::size_t{0});
      return gradient_rows(x, all);
    }
  }
  return {};
}

Vector Problem::gradient_rows(std::span<const double> x, std::span<const std::size_t> rows) const {
  if (kind_ != Kind::Logistic) throw NotApplicable("row gradients need a logistic problem");
  require_same_size(dim_, x.size(), "gradient_rows");
  if (rows.empty()) throw Error("gradient_rows: empty row set");
  const auto& X = data_->features;
  Vector g(dim_, 0.0);
  for (std::size_t r : rows) {
    const double y = data_->labels[r];
    X.add_row_to(r, -y * sigmoid(-y * X.row_dot(r, x)), g);
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (std::size_t j = 0; j < dim_; ++j) g[j] = g[j] * inv + reg_ * x[j];
  return g;
}

std::vector<Problem> Problem::split(std::size_t n) const {
  if (n == 0) throw ConfigError("split needs at least one part");
  if (kind_ != Kind::Logistic) return std::vector<Problem>(n, *this);
  const std::size_t total = data_->samples();
  if (total % n != 0 || total < n) {
    throw ConfigError("logistic split needs the sample count (" + std::to_string(total) +
                      ") divisible by the worker count (" + std::to_string(n) + ")");
  }
  const std::size_t shard = total / n;
  std::vector<Problem> parts;
  std::vector<std::size_t> rows(shard);
  for (std::size_t j = 0; j < n; ++j) {
    std::iota(rows.begin(), rows.end(), j * shard);
    Problem p = logistic(data_->select(rows), reg_);
    parts.push_back(std::move(p));
  }
  return parts;
}

}  // namespace catgrad
