#pragma once

#include <stdexcept>
#include <string>

namespace oplab {

// Base for every error the library raises on its own.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (kink, pole, off-circle point).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition (shape, tolerance, separation, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Requested quantity is not available for this kind of input.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace oplab
