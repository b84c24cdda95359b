#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace detavg {

// Base of every error thrown by the library. Numerical failures and input
// validation failures are kept apart so the CLI can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public NumericalError {
 public:
  NotPositiveDefinite() : NumericalError("matrix is not positive definite") {}
  using NumericalError::NumericalError;
};

class NegativeQuadraticForm : public NumericalError {
 public:
  explicit NegativeQuadraticForm(double value)
      : NumericalError("quadratic form is negative: " + std::to_string(value)), value_(value) {}
  double value() const { return value_; }

 private:
  double value_;
};

class SingularCovariance : public NumericalError {
 public:
  SingularCovariance() : NumericalError("sample covariance is singular") {}
};

class InvalidSampleSize : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyBatch : public ValidationError {
 public:
  EmptyBatch() : ValidationError("cannot combine an empty batch of estimates") {}
};

class DimensionMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EnumerationBudgetExceeded : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyDataset : public ValidationError {
 public:
  EmptyDataset() : ValidationError("dataset has no examples") {}
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace detavg
