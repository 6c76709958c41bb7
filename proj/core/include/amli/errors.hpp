#pragma once

#include <stdexcept>
#include <string>

namespace amli {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Spectral interval with lambda_min >= lambda_max or a nonpositive endpoint.
class DegenerateIntervalError : public Error {
public:
  using Error::Error;
};

/// Vector/matrix dimensions do not match.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Symmetric factorization hit a nonpositive pivot; `pivot` is its index.
class NotSpdError : public Error {
public:
  NotSpdError(const std::string& what, int pivot_index)
      : Error(what), pivot(pivot_index) {}
  int pivot;
};

/// A stabilization polynomial violates q >= 0 on its spectral interval.
class NegativePolynomialError : public Error {
public:
  using Error::Error;
};

/// Requested condition-number target is unreachable (kappa_under <= 1).
class InfeasibleTargetError : public Error {
public:
  using Error::Error;
};

/// Operator or preconditioner turned out indefinite inside an iteration.
class IndefiniteOperatorError : public Error {
public:
  using Error::Error;
};

/// Malformed run configuration or input file.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace amli
