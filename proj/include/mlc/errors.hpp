#pragma once

#include <stdexcept>
#include <string>

namespace mlc {

/// Base class for failures of the numerical core. The CLI maps these to
/// exit code 2; everything else (usage, I/O, config) maps to 1.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotSpd : public NumericError {
 public:
  explicit NotSpd(const std::string& what) : NumericError("matrix is not SPD: " + what) {}
};

class ConvergenceFailure : public NumericError {
 public:
  using NumericError::NumericError;
};

class NotDoublyStochastic : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegenerateAffinity : public NumericError {
 public:
  using NumericError::NumericError;
};

class ZeroMatrix : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Shape errors: mismatched dimensions, traces or label vectors.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

class ShapeMismatch : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

class TraceMismatch : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

class IterationMismatch : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

class LengthMismatch : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

/// Malformed input files (matrix files, label files, configs).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mlc
