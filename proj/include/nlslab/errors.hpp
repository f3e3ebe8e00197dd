#pragma once

#include <stdexcept>
#include <string>

namespace nlslab {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid argument or incompatible objects (grid mismatch, bad bounds, ...).
struct ParameterError : Error {
  using Error::Error;
};

/// Non-finite or otherwise unusable field samples.
struct DataError : Error {
  using Error::Error;
};

/// A numerical procedure failed to produce a trustworthy result.
struct NumericalError : Error {
  using Error::Error;
};

/// Resolvent evaluated too close to a spectral pole.
struct SingularityError : Error {
  using Error::Error;
};

/// An iterative solver did not reach its tolerance.
struct SolverError : Error {
  SolverError(const std::string& msg, double final_residual)
      : Error(msg), residual(final_residual) {}
  double residual;
};

/// Shooting bracket endpoints do not straddle the solution.
struct BracketError : Error {
  using Error::Error;
};

/// A run is configured in a way that cannot produce the requested result.
struct ConfigurationError : Error {
  using Error::Error;
};

/// Input is degenerate for the requested analysis (zero field, empty tail, ...).
struct DegenerateInputError : Error {
  using Error::Error;
};

/// Non-finite samples appeared during time evolution.
struct BlowUpError : Error {
  using Error::Error;
};

/// Emitted files and manifest disagree.
struct ConsistencyError : Error {
  using Error::Error;
};

}  // namespace nlslab
