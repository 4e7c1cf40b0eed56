#pragma once

#include <stdexcept>
#include <string>

namespace tracelab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A point, interval, or box lies outside the set an operation is defined on
// (typically: something dips to t <= 0 in the upper half-space).
struct DomainError : Error {
  using Error::Error;
};

// A grid-level relationship is violated (e.g. querying a grid function at an
// incompatible level).
struct LevelError : Error {
  using Error::Error;
};

// A level-dependent operation was given a level outside its admissible range.
struct LevelOutOfRange : Error {
  using Error::Error;
};

// selected_neighbors was asked about a cube whose level is not 2^j.
struct NotSelectedLayer : Error {
  using Error::Error;
};

// Parameter structs (weights, counterexample, Besov) violate their invariants.
struct InvalidParams : Error {
  using Error::Error;
};

// An operation needing an analytic gradient got a field without one.
struct MissingGradient : Error {
  using Error::Error;
};

// A norm evaluation failed for one row of a ratio experiment.
struct NormFailure : Error {
  using Error::Error;
};

// A cube average did not reach its refinement tolerance and the caller gave
// no place to record the flag.
struct QuadratureNonConvergence : Error {
  using Error::Error;
};

// Experiment configuration rejected; carries the offending field name.
struct ConfigError : Error {
  ConfigError(std::string field_, const std::string& msg)
      : Error(field_ + ": " + msg), field(std::move(field_)) {}
  std::string field;
};

}  // namespace tracelab
