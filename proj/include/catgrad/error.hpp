#pragma once

#include <stdexcept>
#include <string>

namespace catgrad {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sparsity budget outside [1, d] (or non-integer where an integer is required).
class InvalidBudget : public Error {
 public:
  using Error::Error;
};

/// The gradient is identically zero; the caller should treat the point as stationary.
class ZeroGradient : public Error {
 public:
  ZeroGradient() : Error("gradient is zero") {}
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A compressed gradient violates the fixed-width wire layout. Indicates a bug, not bad input.
class EncodingInvariant : public Error {
 public:
  using Error::Error;
};

class CorruptPayload : public Error {
 public:
  using Error::Error;
};

class CorruptFrame : public Error {
 public:
  using Error::Error;
};

class IncompleteRound : public Error {
 public:
  using Error::Error;
};

class NotApplicable : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  EstimationError(const std::string& what, double last_estimate)
      : Error(what), last_estimate_(last_estimate) {}
  double last_estimate() const noexcept { return last_estimate_; }

 private:
  double last_estimate_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace catgrad
