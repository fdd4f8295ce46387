#pragma once

#include <stdexcept>
#include <string>

namespace bhchaos {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A request exceeds a configured dimension or memory cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A statistic is undefined because its input has no spread (zero variance,
// zero spectral width, empty interacting set, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Malformed job specification or command-line input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bhchaos
