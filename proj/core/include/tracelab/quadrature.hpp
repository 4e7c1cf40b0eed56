#pragma once

#include <functional>

#include "tracelab/geometry.hpp"
#include "tracelab/weight.hpp"

namespace tracelab {

// Measure against which box averages are taken.
struct Measure {
  enum class Kind { lebesgue, mu };
  Kind kind = Kind::lebesgue;
  WeightParams wp{};

  static Measure lebesgue() { return {}; }
  static Measure mu(const WeightParams& wp) {
    Measure m;
    m.kind = Kind::mu;
    m.wp = wp;
    return m;
  }
  double of_box(const Box& b) const {
    return kind == Kind::lebesgue ? b.volume() : mu_measure(b, wp);
  }
};

struct TensorResult {
  std::array<double, 2> value{};  // one entry per integrand component
  bool converged = true;
  int refinements = 0;
};

// Tensor-product composite Gauss-Legendre over a box, with an optional
// weight factor depending on the last (t) axis.  Evaluates `ncomp` integrand
// components at shared nodes: f(point, out) fills out[0..ncomp).  Starts
// from `init_cells` subcells per axis and doubles until two successive
// passes agree to rel_tol on every component, up to max_refinements
// doublings; `converged` reports whether the cap was hit.
TensorResult tensor_integrate(
    const std::function<void(const Point&, double*)>& f, int ncomp,
    const Box& box, const std::function<double(double)>& t_weight,
    int order, int init_cells, double rel_tol = 1e-8, int max_refinements = 4);

}  // namespace tracelab
