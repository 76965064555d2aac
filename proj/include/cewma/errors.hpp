#pragma once

#include <stdexcept>
#include <string>

namespace cewma {

// Bad input values: ranges, sums, malformed files, inconsistent rows.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Misclassification matrix cannot be inverted, correction undefined.
class SingularMatrixError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Calibration could not reach the requested in-control ARL.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File or stream level failure, message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cewma
