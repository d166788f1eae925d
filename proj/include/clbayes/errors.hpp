#pragma once

#include <stdexcept>
#include <string>

namespace clbayes {

// Base class for everything thrown by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent user input (files, flags, configs, argument
// domains).  Maps to CLI exit code 2.
struct InvalidInput : Error {
  explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

// CSV/config parse failure carrying a 1-based line number.
struct ParseError : InvalidInput {
  ParseError(const std::string& file, std::size_t line, const std::string& msg)
      : InvalidInput(file + ":" + std::to_string(line) + ": " + msg), line_number(line) {}
  std::size_t line_number;
};

// Numerical failures.  Map to CLI exit code 3.
struct NumericalError : Error {
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Optimiser exhausted its iteration/restart budget without meeting the
// convergence tolerances.
struct NonConvergence : NumericalError {
  explicit NonConvergence(const std::string& msg) : NumericalError(msg) {}
};

// Every cell of some group sits on the boundary (no events or all events),
// so the maximum lies at infinity in the log parametrisation.
struct DegenerateData : NumericalError {
  explicit DegenerateData(const std::string& msg) : NumericalError(msg) {}
};

// The sensitivity matrix at the maximum is singular or too ill-conditioned
// to invert reliably.
struct SingularSensitivity : NumericalError {
  explicit SingularSensitivity(const std::string& msg) : NumericalError(msg) {}
};

// Matrix arguments that must be symmetric/positive definite but are not.
struct NotSymmetric : NumericalError {
  explicit NotSymmetric(const std::string& msg) : NumericalError(msg) {}
};
struct NotPositiveDefinite : NumericalError {
  explicit NotPositiveDefinite(const std::string& msg) : NumericalError(msg) {}
};

// Targeted tuning with a flat direction: the measure gradient vanishes.
struct ZeroGradient : NumericalError {
  explicit ZeroGradient(const std::string& msg) : NumericalError(msg) {}
};

// The chain cannot start because the target is not finite at the initial
// point.
struct NonFiniteTarget : NumericalError {
  explicit NonFiniteTarget(const std::string& msg) : NumericalError(msg) {}
};

// Curve/uniformity summaries asked from too few usable replications.
struct InsufficientRecords : Error {
  explicit InsufficientRecords(const std::string& msg) : Error(msg) {}
};

}  // namespace clbayes
