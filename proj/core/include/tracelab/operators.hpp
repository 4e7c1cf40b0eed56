#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tracelab/dyadic.hpp"
#include "tracelab/field.hpp"

namespace tracelab {

// Shape of the Whitney partition bumps: plateau exactly on the closed
// Whitney box, linear decay to zero over a collar of collar*l(Q) outside
// each face.  collar <= 1/4 keeps every bump inside the l(Q)/4-neighborhood
// of its box, which is what makes supports overlap exactly for comparable
// cubes.  normalization divides by the local bump sum so the family sums
// to one wherever any bump is positive.
struct PartitionSpec {
  double collar = 0.25;
  bool normalization = true;

  void validate() const;
};

// Evidence gathered while watching the trace averages stabilize (or not).
// levels runs k = 0..k_max.  cauchy_lp[i] is ||T_{k+1}f - T_k f||_p for
// k = levels[i] (one entry fewer than levels).  pointwise_probe is
// level-major: for each k, one (x, T_k f(x)) entry per probe point.
// verdict is "converging", "diverging", or "inconclusive"; it labels the
// evidence, it does not decide the limit.
struct TraceDiagnostics {
  std::vector<int> levels;
  std::vector<double> cauchy_lp;
  std::vector<std::pair<Point, double>> pointwise_probe;
  std::string verdict;
  int flagged = 0;  // cube averages that missed the refinement tolerance
};

// Unnormalized trapezoid profile of Q's bump at y; 1 on the closed Whitney
// box, 0 outside the collar.
double raw_bump(const CubeIndex& Q, const Point& y, const PartitionSpec& spec);

// psi_Q(y): the bump normalized by the sum over all cubes active at y.
// Zero whenever Q's own bump is zero.
double partition_value(const CubeIndex& Q, const Point& y,
                       const PartitionSpec& spec);

// The <= 3^{d+1} cubes of the unit-strip family (levels >= 1) whose bump is
// strictly positive at y.  Empty above the top collar (t >= (2+collar)/2).
std::vector<CubeIndex> active_partition_cubes(const Point& y,
                                              const PartitionSpec& spec);

// T_k f: the level-k step function whose value on Q is the plain Lebesgue
// average of f over the inflated Whitney box N(Q), for every Q meeting
// `region`.  If `flagged` is null a non-converged cube average throws
// QuadratureNonConvergence; otherwise it is counted there and the value is
// kept.
BoundaryGridFunction trace_level(const ScalarField& f, int k,
                                 const Box& region, int* flagged = nullptr);

// Runs T_k for k = 0..k_max and reports successive L^p differences plus
// probe values.  Probes default to the origin.  Verdict thresholds: the
// upper-half Cauchy tail below 1e-3 * ||T_0 f||_p reads "converging"; probe
// magnitudes growing more than 10% per doubling of k across the last four
// levels read "diverging"; anything else is "inconclusive".
TraceDiagnostics trace_diagnostics(const ScalarField& f, int k_max, double p,
                                   const Box& region,
                                   const std::vector<Point>& probes = {});

// E g at y: sum over active cubes Q of psi_Q(y) times the average of g over
// the selected ancestor S(Q).  Zero wherever no bump is active (t above the
// top collar); defined for any t > 0.
double extend_eval(const BoundaryGridFunction& g, const Point& y,
                   const PartitionSpec& spec);

// Exact gradient of the piecewise-rational extension away from collar
// kinks; on a kink hyperplane the one-sided value from above (per axis) is
// returned.
Point extend_grad(const BoundaryGridFunction& g, const Point& y,
                  const PartitionSpec& spec);

// Wraps E g as a ScalarField on R^{d+1}_+ for the norm machinery, with the
// selected-ancestor averages precomputed per layer, a constant-detection
// probe (the extension is locally a single ancestor average on most deep
// boxes), and a quadrature-cell hint aligned to the collar kink lattice.
ScalarField extension_field(const BoundaryGridFunction& g,
                            const PartitionSpec& spec);

}  // namespace tracelab
