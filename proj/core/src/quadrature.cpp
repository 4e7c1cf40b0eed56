#include "tracelab/quadrature.hpp"

#include <cmath>
#include <vector>

#include "tracelab/errors.hpp"
#include "tracelab/numerics.hpp"

namespace tracelab {

namespace {

struct AxisNodes {
  std::vector<double> x, w;
};

AxisNodes axis_nodes(double lo, double hi, int order, int cells) {
  const GaussRule& rule = gauss_legendre(order);
  AxisNodes a;
  a.x.reserve(std::size_t(order) * cells);
  a.w.reserve(std::size_t(order) * cells);
  const double h = (hi - lo) / cells;
  for (int c = 0; c < cells; ++c) {
    const double mid = lo + (c + 0.5) * h;
    for (int i = 0; i < order; ++i) {
      a.x.push_back(mid + 0.5 * h * rule.nodes[i]);
      a.w.push_back(0.5 * h * rule.weights[i]);
    }
  }
  return a;
}

// Integrates one subdivision level; `mass` receives the L1 size of the
// quadrature terms per component, the natural scale of cancellation noise.
void single_pass(const std::function<void(const Point&, double*)>& f,
                 int ncomp, const Box& box,
                 const std::function<double(double)>& t_weight, int order,
                 int cells, double* out, double* mass) {
  const int dim = box.size();
  std::array<AxisNodes, kMaxDim> axes;
  for (int i = 0; i < dim; ++i)
    axes[i] = axis_nodes(box.lo[i], box.hi[i], order, cells);
  // Fold the t-weight into the last axis' weights once per pass.
  if (t_weight) {
    AxisNodes& t = axes[dim - 1];
    for (std::size_t i = 0; i < t.x.size(); ++i) t.w[i] *= t_weight(t.x[i]);
  }

  std::array<NeumaierSum, 2> acc;
  double l1[2] = {0, 0};
  std::array<std::size_t, kMaxDim> idx{};
  Point pt = Point::zeros(dim);
  double vals[2];
  for (;;) {
    double wprod = 1.0;
    for (int i = 0; i < dim; ++i) {
      pt[i] = axes[i].x[idx[i]];
      wprod *= axes[i].w[idx[i]];
    }
    f(pt, vals);
    for (int c = 0; c < ncomp; ++c) {
      acc[c].add(wprod * vals[c]);
      l1[c] += std::abs(wprod * vals[c]);
    }
    int i = 0;
    while (i < dim && ++idx[i] == axes[i].x.size()) {
      idx[i] = 0;
      ++i;
    }
    if (i == dim) break;
  }
  for (int c = 0; c < ncomp; ++c) {
    out[c] = acc[c].value();
    mass[c] = l1[c];
  }
}

}  // namespace

TensorResult tensor_integrate(
    const std::function<void(const Point&, double*)>& f, int ncomp,
    const Box& box, const std::function<double(double)>& t_weight,
    int order, int init_cells, double rel_tol, int max_refinements) {
  if (order < 1 || init_cells < 1)
    throw InvalidParams("tensor_integrate: order and init_cells must be >= 1");
  if (ncomp < 1 || ncomp > 2)
    throw InvalidParams("tensor_integrate: ncomp must be 1 or 2");
  if (!box.valid()) throw DomainError("tensor_integrate: malformed box");

  TensorResult res;
  double prev[2], cur[2], mass[2];
  single_pass(f, ncomp, box, t_weight, order, init_cells, prev, mass);
  int cells = init_cells;
  for (int r = 1; r <= max_refinements; ++r) {
    cells *= 2;
    single_pass(f, ncomp, box, t_weight, order, cells, cur, mass);
    res.refinements = r;
    bool ok = true;
    for (int c = 0; c < ncomp; ++c) {
      // Relative agreement, with a floor at the rounding noise of a sum
      // whose terms have L1 size mass[c]; integrals that cancel to zero
      // (odd symmetry etc.) converge instead of flagging.
      const double tol =
          std::max(rel_tol * std::abs(cur[c]), 1e-13 * mass[c]);
      if (std::abs(cur[c] - prev[c]) > tol) ok = false;
    }
    if (ok) {
      for (int c = 0; c < ncomp; ++c) res.value[c] = cur[c];
      return res;
    }
    for (int c = 0; c < ncomp; ++c) prev[c] = cur[c];
  }
  for (int c = 0; c < ncomp; ++c) res.value[c] = prev[c];
  res.converged = false;
  return res;
}

}  // namespace tracelab
