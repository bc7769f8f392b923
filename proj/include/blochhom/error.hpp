#pragma once

#include <stdexcept>
#include <string>

namespace blochhom {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid user input (config, expressions, field data).
/// The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical certificate failed (simplicity, compatibility, convergence...).
/// The CLI maps these to exit code 1.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class CoercivityError : public InputError {
 public:
  using InputError::InputError;
};

class TruncationError : public InputError {
 public:
  using InputError::InputError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SimplicityError : public NumericalError {
 public:
  SimplicityError(const std::string& what, double gap_below, double gap_above)
      : NumericalError(what), gap_below_(gap_below), gap_above_(gap_above) {}
  double gap_below() const { return gap_below_; }
  double gap_above() const { return gap_above_; }

 private:
  double gap_below_;
  double gap_above_;
};

class BandCrossingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FredholmError : public NumericalError {
 public:
  FredholmError(const std::string& what, double projection)
      : NumericalError(what), projection_(projection) {}
  /// |<psi, rhs>| of the rejected right-hand side.
  double projection() const { return projection_; }

 private:
  double projection_;
};

class ConditioningError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InconsistencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DefinitenessError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FactorizationError : public NumericalError {
 public:
  FactorizationError(const std::string& what, double min_pivot)
      : NumericalError(what), min_pivot_(min_pivot) {}
  double min_pivot() const { return min_pivot_; }

 private:
  double min_pivot_;
};

}  // namespace blochhom
