#pragma once

// Slow reference implementations the library's fast paths are checked
// against.  Everything here favors directness over speed: raw index walks,
// no caching, no layer tricks, set semantics spelled out.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "tracelab/dyadic.hpp"
#include "tracelab/field.hpp"
#include "tracelab/norms.hpp"
#include "tracelab/numerics.hpp"

namespace oracles {

using tracelab::BesovParams;
using tracelab::BoundaryGridFunction;
using tracelab::Box;
using tracelab::CubeIndex;
using tracelab::Point;
using tracelab::pow2;

// Cube corners are exact dyadic doubles, so closed-box intersection is an
// exact comparison.
inline bool closed_touch(const CubeIndex& a, const CubeIndex& b) {
  const Box ra = tracelab::realize(a), rb = tracelab::realize(b);
  for (int i = 0; i < a.dim; ++i)
    if (ra.hi[i] < rb.lo[i] || rb.hi[i] < ra.lo[i]) return false;
  return true;
}

template <class Fn>
void walk_indices(const std::array<std::int64_t, 3>& lo,
                  const std::array<std::int64_t, 3>& hi, int dim, Fn&& fn) {
  std::array<std::int64_t, 3> m = lo;
  for (;;) {
    fn(m);
    int i = 0;
    while (i < dim) {
      if (++m[i] <= hi[i]) break;
      m[i] = lo[i];
      ++i;
    }
    if (i == dim) return;
  }
}

// Every cube of `level` whose index lies within two cells of Q's footprint,
// a strict superset of anything that can touch Q.
inline std::vector<CubeIndex> candidates_near(const CubeIndex& Q, int level) {
  const Box qb = tracelab::realize(Q);
  const double l = pow2(-level);
  std::array<std::int64_t, 3> lo{}, hi{};
  for (int i = 0; i < Q.dim; ++i) {
    lo[i] = std::int64_t(std::floor(qb.lo[i] / l)) - 2;
    hi[i] = std::int64_t(std::ceil(qb.hi[i] / l)) + 2;
  }
  std::vector<CubeIndex> out;
  walk_indices(lo, hi, Q.dim, [&](const std::array<std::int64_t, 3>& m) {
    CubeIndex c;
    c.level = level;
    c.dim = Q.dim;
    c.m = m;
    out.push_back(c);
  });
  return out;
}

// The ~ relation spelled out: edge ratio in [1/2, 2] means levels within
// one of each other; then closures must intersect.  Includes Q itself.
inline std::vector<CubeIndex> brute_neighbors(const CubeIndex& Q) {
  std::vector<CubeIndex> out;
  for (int lv = Q.level - 1; lv <= Q.level + 1; ++lv)
    for (const CubeIndex& c : candidates_near(Q, lv))
      if (closed_touch(Q, c)) out.push_back(c);
  return out;
}

// Selected-layer relation as a set: cubes of Q's layer and of the next
// coarser selected layer (which for j = 0 is the same level again) whose
// closures meet Q's.  Includes Q.
inline std::vector<CubeIndex> brute_selected_neighbors(const CubeIndex& Q,
                                                       int j) {
  std::set<CubeIndex> uniq;
  for (int lv : {tracelab::layer_level(j), tracelab::layer_level(j - 1)})
    for (const CubeIndex& c : candidates_near(Q, lv))
      if (closed_touch(Q, c)) uniq.insert(c);
  return {uniq.begin(), uniq.end()};
}

// Layer-by-layer norm straight from its definition.  The frame is the
// support hull widened by two coarse-layer cells, so every pair with a
// nonzero difference is enumerated.
inline double brute_besov_seminorm(const BoundaryGridFunction& g,
                                   const BesovParams& bp) {
  Box hull;
  bool any = false;
  for (const auto& [q, v] : g.values) {
    const Box cell = tracelab::realize(q);
    if (!any) {
      hull = cell;
      any = true;
    } else {
      for (int i = 0; i < g.dim; ++i) {
        hull.lo[i] = std::min(hull.lo[i], cell.lo[i]);
        hull.hi[i] = std::max(hull.hi[i], cell.hi[i]);
      }
    }
  }
  if (!any) return 0.0;

  double total = 0;
  for (int j = 0; j <= bp.j_max; ++j) {
    const int n = tracelab::layer_level(j);
    const int nc = tracelab::layer_level(j - 1);
    const double vol = std::pow(pow2(-n), g.dim);
    const double edge = pow2(-n);
    const double lc = pow2(-nc);
    std::array<std::int64_t, 3> lo{}, hi{};
    for (int i = 0; i < g.dim; ++i) {
      lo[i] = std::int64_t(std::floor((hull.lo[i] - 2 * lc) / edge));
      hi[i] = std::int64_t(std::ceil((hull.hi[i] + 2 * lc) / edge));
    }
    double layer = 0;
    walk_indices(lo, hi, g.dim, [&](const std::array<std::int64_t, 3>& m) {
      CubeIndex Q;
      Q.level = n;
      Q.dim = g.dim;
      Q.m = m;
      const double aq = tracelab::grid_average(g, Q);
      double cell = 0;
      for (const CubeIndex& Qn : brute_selected_neighbors(Q, j)) {
        if (Qn == Q) continue;
        const double d = aq - tracelab::grid_average(g, Qn);
        cell += std::pow(std::abs(d), bp.p);
      }
      layer += vol * cell;
    });
    total += std::pow(double(n) + 2.0, bp.lambda_or_gamma) * layer;
  }
  return total;
}

// Central differences of a scalar function of several variables.
inline Point fd_gradient(const std::function<double(const Point&)>& f,
                         const Point& x, double h) {
  Point g = Point::zeros(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Point a = x, b = x;
    a[i] -= h;
    b[i] += h;
    g[i] = (f(b) - f(a)) / (2 * h);
  }
  return g;
}

// Composite Simpson rule, the independent 1-d quadrature used to
// cross-check closed forms and table-driven integrals.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace oracles
