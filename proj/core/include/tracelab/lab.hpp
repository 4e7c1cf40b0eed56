#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tracelab/field.hpp"
#include "tracelab/norms.hpp"
#include "tracelab/numerics.hpp"
#include "tracelab/operators.hpp"
#include "tracelab/weight.hpp"

namespace tracelab {

enum class ExperimentKind {
  ap_scan,
  counterexample,
  trace_bound,
  besov_trace_bound,
  extension_bound,
  retraction,
  partition_check,
  poincare_check,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_from_name(const std::string& name);  // ConfigError
std::vector<std::string> experiment_names();

// One experiment run, fully determined by these fields plus the seed.
// Negative k_max/j_max/level/samples and NaN alpha/zero gamma mean "use the
// experiment's own default"; normalized() resolves them.  alpha defaults to
// the borderline exponent p-1 everywhere, and the trace/extension
// experiments require exactly that value.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::ap_scan;
  double p = 2.0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double lambda = 3.0;
  double beta = 0.0;   // counterexample shape parameter
  double gamma = 0.0;  // layer exponent of the embedding target
  int d = 1;
  int k_max = -1;
  int j_max = -1;
  int level = -1;    // boundary grid level (extension / retraction)
  int samples = -1;  // random draws (grids, points, boxes)
  std::uint64_t seed = 1;
  std::string output_path;  // directory for the CSV/JSON pair; empty: no files
  bool allow_flagged = false;
  double eps = -1.0;   // lower truncation of body norms
  int resolution = 4;  // Gauss points per axis per quadrature cell

  ExperimentConfig normalized() const;
  void validate() const;  // pre: normalized.  Throws ConfigError.
  WeightParams weight() const { return {p, alpha, lambda, d}; }
};

// An inequality the experiment held its numbers against.  Boolean checks
// (verdict equality and the like) report fitted 1 or 0 against tolerance 1.
struct Assertion {
  std::string name;
  bool passed = false;
  double fitted = 0;     // the measured constant or extremum
  double tolerance = 0;  // the bound it was compared to
};

struct ExperimentReport {
  using Cell = std::variant<std::int64_t, double, std::string>;

  std::string experiment;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::map<std::string, double> fitted_exponents;
  std::vector<Assertion> assertions;
  std::vector<std::pair<std::string, std::string>> notes;  // verdicts etc.
  int flagged_rows = 0;           // rows carrying quadrature flags
  double wall_time_seconds = 0;   // reported in the JSON only

  bool passed() const;

  // RFC-4180 quoting, '\n' line ends, shortest round-trip doubles: the same
  // config and seed reproduce the same bytes.  The JSON mirror adds config,
  // assertions and wall time.
  std::string csv() const;
  std::string json() const;
};

// Validates, dispatches, times, and (when output_path is set) writes
// <name>.csv and <name>.json into it, hyphens in the name turned into
// underscores, each file written to a temporary and renamed into place.
ExperimentReport run(const ExperimentConfig& config);

// A norm evaluation for one family member; flags counts quadrature cells
// that missed tolerance.  Throwing NormFailure skips the row.
using FamilyMember = std::variant<ScalarField, BoundaryGridFunction>;
struct NormOutcome {
  double value = 0;
  int flags = 0;
};
using NormFunctional = std::function<NormOutcome(const FamilyMember&)>;

// Rows (id, numerator, denominator, ratio, flags, skipped); asserts every
// computed ratio is finite.  A 0/0 entry becomes a skipped row, not a NaN.
ExperimentReport ratio_experiment(
    const std::vector<std::pair<std::string, FamilyMember>>& family,
    const NormFunctional& numerator, const NormFunctional& denominator);

// The five-function test family on (-2,2]^d x (0,1]: a bump in x times a
// smooth cutoff in t, the same damped by t^s for s = 1/2, 1, 2, and a
// tilted copy carrying an x_1 factor.  All have analytic gradients and
// quadrature cell hints.
std::vector<std::pair<std::string, ScalarField>> suite_fields(int d);

// Piecewise-constant data on the level cubes of (0,1]^d, values uniform in
// [-1, 1] in deterministic cube order.
BoundaryGridFunction random_grid(int level, int d, Rng& rng);

int cli_main(int argc, char** argv);

}  // namespace tracelab
