#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rimle {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments: dimension mismatches, out-of-range configuration values,
/// unusable inputs.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The pseudo-density vanished at some observation (zero improper constant
/// density and all component densities numerically zero), so the
/// log-likelihood and posteriors are undefined.
class DegenerateLikelihoodError : public Error {
 public:
  using Error::Error;
};

/// Every unit of responsibility landed on the noise column, leaving nothing
/// to estimate the Gaussian components from.
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

/// All scatter eigenvalues of all components are zero; no covariance matrix
/// can be recovered.
class DegenerateScatterError : public Error {
 public:
  using Error::Error;
};

/// A component kept starving after the re-seeding budget was exhausted.
class EmptyComponentError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. Coordinates are 1-based; a column of 0 means the
/// problem concerns the whole row.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t row, std::size_t column)
      : Error(message), row_(row), column_(column) {}

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Every start of a multistart run failed; the message aggregates the
/// per-start failures.
class MultistartError : public Error {
 public:
  using Error::Error;
};

}  // namespace rimle
