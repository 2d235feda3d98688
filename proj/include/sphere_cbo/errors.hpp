#pragma once

#include <stdexcept>
#include <string>

namespace sphere_cbo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Raised when a vector that must be renormalized has (numerically) zero length.
class DegenerateVector : public Error {
 public:
  using Error::Error;
};

/// Raised when an objective returns NaN or +-inf for some agent.
class InvalidObjectiveValue : public Error {
 public:
  using Error::Error;
};

class UnsupportedObjective : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sphere_cbo

namespace sphere_cbo {

/// Wraps an error raised inside the run loop with the iteration it happened at.
class RunError : public Error {
 public:
  RunError(std::size_t iteration, const std::string& what)
      : Error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace sphere_cbo
