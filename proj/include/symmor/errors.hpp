#pragma once

#include <stdexcept>
#include <string>

namespace symmor {

// Shape or length mismatch between arguments.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Base for every failure of a numerical scheme (singular systems,
// iteration caps, non-finite values).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Gram or snapshot matrix has fewer than the requested independent columns.
class RankDeficiencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Argument violates a structural precondition (e.g. non-symplectic basis
// where a symplectic one is required).
class StructureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed configuration, checkpoint or container files.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace symmor
