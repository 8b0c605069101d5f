#include "catgrad/vector.hpp"

#include <cmath>
#include <string>

#include "catgrad/error.hpp"

namespace catgrad {

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(norm_sq(v)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_same_size(y.size(), x.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

std::size_t count_nonzeros(std::span<const double> v) {
  std::size_t n = 0;
  for (double x : v) n += (x != 0.0);
  return n;
}

void require_same_size(std::size_t expected, std::size_t actual, const char* what) {
  if (expected != actual) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(expected) +
                            ", got " + std::to_string(actual));
  }
}

}  // namespace catgrad
