#pragma once

#include <stdexcept>
#include <string>

namespace rotstar {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (negative density,
/// gamma <= 1, m >= 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Field algebra between fields sampled on different grids.
class GridMismatchError : public Error {
 public:
  using Error::Error;
};

/// A hypothesis of an existence result does not hold for the supplied data.
class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure failed to converge or stagnated.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A density touches the outer grid layers, so its potential would be
/// truncated.
class SupportViolation : public Error {
 public:
  using Error::Error;
};

/// Degenerate input (empty positive set, zero constraint value).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Internal consistency check failed; indicates an operator bug.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace rotstar
