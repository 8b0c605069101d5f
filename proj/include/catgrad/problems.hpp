#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "catgrad/vector.hpp"

namespace catgrad {

/// Compressed-sparse-row matrix.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  explicit SparseMatrix(std::size_t cols) : cols_(cols), row_ptr_{0} {}

  /// Appends a row; indices must be < cols() and strictly increasing.
  void add_row(std::span<const std::uint32_t> cols, std::span<const double> vals);

  std::size_t rows() const noexcept { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  /// Widens the column count; existing entries are unaffected.
  void resize_cols(std::size_t cols);

  double row_dot(std::size_t r, std::span<const double> x) const;
  /// y += a * row_r
  void add_row_to(std::size_t r, double a, std::span<double> y) const;

  Vector multiply(std::span<const double> x) const;
  Vector multiply_transpose(std::span<const double> y) const;

  SparseMatrix select_rows(std::span<const std::size_t> rows) const;

  std::span<const std::uint32_t> row_indices(std::size_t r) const;
  std::span<const double> row_values(std::size_t r) const;

  static SparseMatrix from_dense(std::size_t rows, std::size_t cols, std::span<const double> a);

 private:
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> values_;
};

/// Labelled design matrix, labels in {-1, +1}.
struct Dataset {
  SparseMatrix features;
  Vector labels;

  std::size_t samples() const noexcept { return labels.size(); }
  Dataset select(std::span<const std::size_t> rows) const;
};

/// Reads `label idx:val idx:val ...` with 1-based indices. gzip input is detected and
/// decompressed transparently. Labels 0/1 are mapped to -1/+1; anything else is rejected.
/// The dimension is the largest index seen unless `dim` is given.
Dataset load_libsvm(const std::string& path, std::optional<std::size_t> dim = std::nullopt);

struct SyntheticSpec {
  std::size_t samples = 2000;
  std::size_t features = 500;
  std::size_t nnz_per_row = 10;
  /// Zipf exponent for feature popularity; larger means fewer dominant features.
  double zipf = 1.1;
  double label_noise = 0.05;
  std::uint64_t seed = 1;
};

/// Sparse text-like design with Zipf-distributed feature frequencies, unit-norm rows and
/// labels from a planted linear model.
Dataset synthetic_sparse_dataset(const SyntheticSpec& spec);

struct PowerIteration {
  double eigenvalue = 0.0;
  std::size_t iterations = 0;
};

/// Largest eigenvalue of X^T X by power iteration on relative change. Throws EstimationError
/// (carrying the last estimate) when max_iterations is exhausted.
PowerIteration gram_max_eigenvalue(const SparseMatrix& x, double tolerance = 1e-6,
                                   std::size_t max_iterations = 10000);

/// Smooth objective with exact gradient and a known smoothness constant L.
class Problem {
 public:
  enum class Kind : std::uint8_t { Logistic, IsotropicQuadratic, RankOneQuadratic, Quadratic };

  /// (1/N) sum log(1 + exp(-y_i a_i^T x)) + reg/2 ||x||^2, with
  /// L = lambda_max(X^T X)/(4N) + reg and mu = reg.
  static Problem logistic(Dataset data, double reg);
  /// L/2 ||x||^2.
  static Problem isotropic_quadratic(double smoothness, std::size_t dim);
  /// 1/2 x^T (L/d) 1 1^T x. Its gradient has identical entries everywhere.
  static Problem rank_one_quadratic(double smoothness, std::size_t dim);
  /// 1/2 x^T A x for a symmetric PSD row-major A whose largest eigenvalue the caller supplies.
  static Problem quadratic(Vector a, std::size_t dim, double smoothness,
                           std::optional<double> strong_convexity = std::nullopt);

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  double smoothness() const noexcept { return smoothness_; }
  std::optional<double> strong_convexity() const noexcept { return mu_; }

  double loss(std::span<const double> x) const;
  Vector gradient(std::span<const double> x) const;

  /// Logistic only: gradient of the mean loss over a row subset plus the regulariser.
  Vector gradient_rows(std::span<const double> x, std::span<const std::size_t> rows) const;

  /// Samples for logistic problems, 1 for quadratics.
  std::size_t samples() const noexcept;
  const Dataset* data() const noexcept { return data_ ? &*data_ : nullptr; }
  double regularization() const noexcept { return reg_; }

  /// n local objectives whose average is this one: equal row shards for logistic (N must be
  /// divisible by n), copies otherwise.
  std::vector<Problem> split(std::size_t n) const;

 private:
  Problem() = default;

  Kind kind_ = Kind::IsotropicQuadratic;
  std::size_t dim_ = 0;
  double smoothness_ = 0.0;
  std::optional<double> mu_;
  double reg_ = 0.0;
  std::optional<Dataset> data_;
  Vector matrix_;
};

}  // namespace catgrad
