#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tracelab/dyadic.hpp"
#include "tracelab/geometry.hpp"
#include "tracelab/quadrature.hpp"

namespace tracelab {

// An evaluatable function on R^d (boundary data) or R^{d+1}_+ (body data,
// t = last coordinate), with an optional analytic gradient.
struct ScalarField {
  int dim = 2;  // number of coordinates eval expects
  std::function<double(const Point&)> eval;
  std::function<Point(const Point&)> grad;  // empty if unavailable
  Box support;                              // eval vanishes outside
  std::string name;

  // Optional integrator hooks.  constant_probe(box) returns the field's
  // value if it is provably constant on the box (piecewise-constant
  // structure); init_cells(box) names a subdivision whose cell boundaries
  // hit the field's kink lattice, so refinement stays aligned.
  std::function<std::optional<double>(const Box&)> constant_probe;
  std::function<int(const Box&)> init_cells;

  bool has_grad() const { return bool(grad); }
  double operator()(const Point& x) const { return eval(x); }
};

// Piecewise-constant function on one dyadic level of R^d; absent cubes carry
// the value 0.
struct BoundaryGridFunction {
  int level = 0;
  int dim = 1;
  std::unordered_map<CubeIndex, double, CubeIndexHash> values;
  Box support;

  double value_of(const CubeIndex& Q) const {
    auto it = values.find(Q);
    return it == values.end() ? 0.0 : it->second;
  }
  double value_at(const Point& x) const { return value_of(locate(x, level)); }
  std::vector<CubeIndex> sorted_cubes() const;
};

struct CounterexampleParams {
  double p = 1.0;
  double lambda = -1.0;
  double beta = 0.0;
  int dim = 1;

  // beta = 0 iff p = 1; otherwise 0 < beta < 1 < beta*p.
  void validate() const;
};

// The field u(x', t) = phi(x') max{v(t), 0} whose trace averages blow up at
// every interior boundary point while the weighted Sobolev norm stays
// finite.  phi is the standard mollifier bump, == 1 on [-1,1]^d, supported
// in [-2,2]^d; v integrates 1/(s log(e/s)(1 + log^beta log(e/s))) from t to 1.
ScalarField counterexample_field(const CounterexampleParams& cp);

// The mollifier profile: 1 for s <= 1, exp(1 - 1/(1-(s-1)^2)) for 1 < s < 2,
// 0 beyond; its derivative; and the tensor bump built from it.
double mollifier_rho(double s);
double mollifier_rho_prime(double s);
double bump_value(const Point& x);
Point bump_gradient(const Point& x);

struct AverageResult {
  double value = 0.0;
  bool converged = true;  // false: the refinement cap was hit
  int refinements = 0;
};

// Integral average of f over a box.  Consults the field's constant_probe
// first; otherwise tensor Gauss-Legendre with the given nodes per axis per
// cell, cells doubled until successive passes agree to 1e-8 relative (four
// doublings at most).
AverageResult cube_average(const ScalarField& f, const Box& region,
                           const Measure& measure, int order = 4);

// Boundary discretization: cube averages of f on every level-L cube meeting
// its support.  Cells whose quadrature failed to settle are counted into
// *flagged_cells when given.
BoundaryGridFunction sample_to_grid(const ScalarField& f, int level,
                                    int* flagged_cells = nullptr);

// Exact average of a grid function over a dyadic cube: the stored value at
// grid level, the containing cell's value when Q is finer (g is constant
// there), the mean of descendants when Q is coarser.
double grid_average(const BoundaryGridFunction& g, const CubeIndex& Q);

// Exact level coarsening (descendant averages), the fast path behind
// layer-by-layer Besov sums.
BoundaryGridFunction coarsen_to(const BoundaryGridFunction& g, int level);

// Text form: header "level=L dim=d", then one sorted line per cube
// "m_1 ... m_d value"; doubles print in shortest round-trip form, so
// serialize/deserialize is exact.
std::string serialize(const BoundaryGridFunction& g);
BoundaryGridFunction deserialize_grid(const std::string& text);

// Shortest round-trip decimal form of a double (also used by the CSV layer).
std::string format_double(double v);

}  // namespace tracelab
