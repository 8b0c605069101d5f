#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace catgrad {

/// Dense iterate or gradient in R^d.
using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm_sq(std::span<const double> v);
double norm(std::span<const double> v);

/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

std::size_t count_nonzeros(std::span<const double> v);

/// Throws DimensionMismatch when the sizes differ.
void require_same_size(std::size_t expected, std::size_t actual, const char* what);

}  // namespace catgrad
