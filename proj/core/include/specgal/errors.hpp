#pragma once

#include <stdexcept>
#include <string>

namespace specgal {

// Root of every error raised by the library. Callers that only need to
// report failures can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid construction parameters (non-positive lengths, bad dimension...).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// Mismatched sizes, grids or bases between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values encountered during evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Operation is undefined for the given object (e.g. Poincare constant of a
// periodic basis, which has a zero mode).
class NotApplicableError : public Error {
 public:
  using Error::Error;
};

class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

// Adaptive integration gave up. `last_good_time()` is the last time at which
// the state was accepted.
class IntegrationFailure : public Error {
 public:
  IntegrationFailure(const std::string& what, double last_good_time)
      : Error(what), last_good_time_(last_good_time) {}
  double last_good_time() const noexcept { return last_good_time_; }

 private:
  double last_good_time_;
};

class KernelError : public Error {
 public:
  using Error::Error;
};

class NotTraceClassError : public KernelError {
 public:
  using KernelError::KernelError;
};

class EnsembleError : public Error {
 public:
  using Error::Error;
};

// Raised when alpha <= D/4, where the resolvent-square integral diverges.
class DivergentIntegralError : public Error {
 public:
  using Error::Error;
};

class InstabilityError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class LinearAlgebraError : public Error {
 public:
  using Error::Error;
};

class PoleError : public Error {
 public:
  using Error::Error;
};

}  // namespace specgal
