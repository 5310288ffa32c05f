#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bcm {

// Root of everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A configuration or data record violates an invariant; names the field.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Log-likelihood or one of its derivatives is not finite at the given point.
class EvaluationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// The data carry no information about the parameters (e.g. zero events).
class NoInformationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Information matrix is singular or not positive definite.
class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Estimate sits on the boundary of the parameter space (e.g. a zero rate).
class BoundaryError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A test decision was requested from a fit that did not converge.
class DecisionUnavailableError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace bcm
