#pragma once

#include <stdexcept>
#include <string>

namespace fimopt {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree with the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite input or a factorization that failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A quantity that must be strictly positive is not.
class PositivityError : public Error {
 public:
  using Error::Error;
};

/// An input violates a documented precondition (e.g. non-orthonormal basis).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dense oracle paths refuse inputs above their size guard.
class RefusalError : public Error {
 public:
  using Error::Error;
};

}  // namespace fimopt
