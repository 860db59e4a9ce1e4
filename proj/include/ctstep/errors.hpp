#pragma once

#include <stdexcept>
#include <string>

namespace ctstep {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid argument values (bad sizes, out-of-range parameters, ...).
struct ArgumentError : Error {
  using Error::Error;
};

/// The requested combination is outside what the module supports.
struct CapabilityError : Error {
  using Error::Error;
};

/// An iterative solver failed to converge within its budget.
struct NumericError : Error {
  using Error::Error;
};

/// A named entity (path, method, problem) does not exist.
struct NotFoundError : Error {
  using Error::Error;
};

/// Solution magnitude exceeded the blow-up threshold mid-integration.
struct BlowUpError : NumericError {
  BlowUpError(const std::string& msg, int substep_index_, double t_)
      : NumericError(msg), substep_index(substep_index_), t(t_) {}
  int substep_index;
  double t;
};

/// Malformed or inconsistent CLI/experiment configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// A condition that indicates a bug in this library, not in caller input.
struct InternalError : Error {
  using Error::Error;
};

} // namespace ctstep
