#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kanopt {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyTrainingSet : public Error {
 public:
  EmptyTrainingSet() : Error("training set is empty") {}
};

/// Raised when a non-finite loss is encountered during training.
/// Carries the last parameter vector that still evaluated to a finite loss.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::string what, std::vector<double> last_finite)
      : Error(std::move(what)), last_finite_parameters(std::move(last_finite)) {}

  std::vector<double> last_finite_parameters;
};

class NotFitted : public Error {
 public:
  NotFitted() : Error("surrogate used before fit") {}
};

class BudgetExhausted : public Error {
 public:
  explicit BudgetExhausted(int fes_max)
      : Error("evaluation budget exhausted (fes_max=" + std::to_string(fes_max) + ")") {}
};

class BoundsViolation : public Error {
 public:
  using Error::Error;
};

class OperatorArity : public Error {
 public:
  using Error::Error;
};

class SelectionSize : public Error {
 public:
  using Error::Error;
};

class SampleSize : public Error {
 public:
  using Error::Error;
};

class UndefinedScore : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; line is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}

  std::size_t line_number;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace kanopt
