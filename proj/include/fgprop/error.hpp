#pragma once

#include <stdexcept>
#include <string>

namespace fgprop {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix dimensions do not agree with what an operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A layer or variable id does not exist.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Malformed network topology (cycles, unreachable layers, bad arity).
class GraphError : public Error {
 public:
  using Error::Error;
};

/// Training loss became NaN or infinite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

/// Model or dataset file could not be parsed.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A covariance is not symmetric positive (semi)definite as required.
class CovarianceError : public Error {
 public:
  using Error::Error;
};

/// Normal equations stayed singular after damping escalation, or a marginal
/// was requested for a variable the graph does not identify.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinite value produced during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or parameter value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fgprop
