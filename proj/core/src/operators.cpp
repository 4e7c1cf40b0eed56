#include "tracelab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "tracelab/errors.hpp"
#include "tracelab/norms.hpp"
#include "tracelab/numerics.hpp"
#include "tracelab/parallel.hpp"

namespace tracelab {

void PartitionSpec::validate() const {
  if (!(collar > 0) || !(collar <= 0.25))
    throw InvalidParams("partition: collar must lie in (0, 1/4]");
}

namespace {

// One axis of the trapezoid profile: 1 on [lo, hi], linear to 0 across a
// collar of width cl on either side.
double axis_factor(double v, double lo, double hi, double cl) {
  if (v >= lo && v <= hi) return 1.0;
  const double d = v < lo ? lo - v : v - hi;
  return d >= cl ? 0.0 : 1.0 - d / cl;
}

// One-sided derivative from above: rising collar [lo-cl, lo), plateau
// [lo, hi), falling collar [hi, hi+cl).
double axis_deriv(double v, double lo, double hi, double cl) {
  if (v >= lo - cl && v < lo) return 1.0 / cl;
  if (v >= hi && v < hi + cl) return -1.0 / cl;
  return 0.0;
}

// Levels whose bumps can be positive somewhere in the t-interval (a, b]:
// level k is live iff (1-c) 2^-k < b and a < (2+c) 2^-k.  The window spans
// log2((2+c)/(1-c)) < 2 levels for a single t.
void live_levels(double a, double b, double collar, std::vector<int>& out) {
  out.clear();
  const double lo_f = 1.0 - collar, hi_f = 2.0 + collar;
  // Start one level early so float rounding in the guess can never skip the
  // first live level; the per-level test below is the authority.
  for (int k = std::max(1, int(std::floor(std::log2(lo_f / b))) - 1); k <= 30;
       ++k) {
    if (!(hi_f * pow2(-k) > a)) break;
    if (lo_f * pow2(-k) < b) out.push_back(k);
  }
}

struct ActiveBump {
  CubeIndex cube;
  double value;
};

void gather_active(const Point& y, const PartitionSpec& spec,
                   std::vector<ActiveBump>& out) {
  out.clear();
  const int d = y.size() - 1;
  const double t = y.t();
  std::vector<int> levels;
  live_levels(t, t, spec.collar, levels);
  for (int k : levels) {
    const double l = pow2(-k);
    const double cl = spec.collar * l;
    const double tf = axis_factor(t, l, 2 * l, cl);
    if (tf <= 0) continue;
    // Horizontal candidates: at most the three cells around y per axis.
    std::array<std::vector<std::pair<std::int64_t, double>>, 3> ax;
    bool dead = false;
    for (int i = 0; i < d; ++i) {
      const std::int64_t base =
          std::int64_t(std::floor(y[i] / l));
      for (std::int64_t m = base - 1; m <= base + 1; ++m) {
        const double fac = axis_factor(y[i], l * double(m),
                                       l * double(m + 1), cl);
        if (fac > 0) ax[i].emplace_back(m, fac);
      }
      if (ax[i].empty()) {
        dead = true;
        break;
      }
    }
    if (dead) continue;
    std::array<std::size_t, 3> idx{};
    for (;;) {
      CubeIndex Q;
      Q.level = k;
      Q.dim = d;
      double b = tf;
      for (int i = 0; i < d; ++i) {
        Q.m[i] = ax[i][idx[i]].first;
        b *= ax[i][idx[i]].second;
      }
      out.push_back({Q, b});
      int i = 0;
      while (i < d && ++idx[i] == ax[i].size()) {
        idx[i] = 0;
        ++i;
      }
      if (i == d) break;
    }
  }
}

// The normalized extension sum and, optionally, its exact gradient via the
// quotient rule on the raw bumps.
template <class Avg>
double extend_core(const Point& y, const PartitionSpec& spec, const Avg& avg,
                   Point* grad_out) {
  std::vector<ActiveBump> active;
  gather_active(y, spec, active);
  if (grad_out) *grad_out = Point::zeros(y.size());
  if (active.empty()) return 0.0;

  double num = 0, den = 0;
  std::vector<double> values(active.size());
  for (std::size_t i = 0; i < active.size(); ++i) {
    values[i] = avg(selected_ancestor(active[i].cube));
    num += values[i] * active[i].value;
    den += active[i].value;
  }
  const double result = num / den;
  if (!grad_out) return result;

  for (int axis = 0; axis < y.size(); ++axis) {
    double dnum = 0, dden = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const CubeIndex& Q = active[i].cube;
      const double l = pow2(-Q.level);
      const double cl = spec.collar * l;
      // d/dy_axis of the bump: swap one axis factor for its derivative.
      double partial;
      if (axis == Q.dim) {
        partial = axis_deriv(y[axis], l, 2 * l, cl);
        if (partial != 0)
          partial *= active[i].value / axis_factor(y[axis], l, 2 * l, cl);
      } else {
        const double lo = l * double(Q.m[axis]);
        partial = axis_deriv(y[axis], lo, lo + l, cl);
        if (partial != 0)
          partial *= active[i].value / axis_factor(y[axis], lo, lo + l, cl);
      }
      dnum += values[i] * partial;
      dden += partial;
    }
    (*grad_out)[axis] = (dnum * den - num * dden) / (den * den);
  }
  return result;
}

}  // namespace

double raw_bump(const CubeIndex& Q, const Point& y, const PartitionSpec& spec) {
  spec.validate();
  if (y.size() != Q.dim + 1)
    throw DomainError("raw_bump: point must live in R^{d+1}");
  const double l = edge_length(Q);
  const double cl = spec.collar * l;
  double v = axis_factor(y.t(), l, 2 * l, cl);
  for (int i = 0; i < Q.dim && v > 0; ++i) {
    const double lo = l * double(Q.m[i]);
    v *= axis_factor(y[i], lo, lo + l, cl);
  }
  return std::max(v, 0.0);
}

double partition_value(const CubeIndex& Q, const Point& y,
                       const PartitionSpec& spec) {
  spec.validate();
  if (Q.level < 1)
    throw LevelOutOfRange("partition_value: the family has levels >= 1");
  if (!(y.t() > 0)) throw DomainError("partition_value: t must be > 0");
  const double own = raw_bump(Q, y, spec);
  if (own == 0.0) return 0.0;
  if (!spec.normalization) return own;
  std::vector<ActiveBump> active;
  gather_active(y, spec, active);
  double den = 0;
  for (const ActiveBump& ab : active) den += ab.value;
  return own / den;
}

std::vector<CubeIndex> active_partition_cubes(const Point& y,
                                              const PartitionSpec& spec) {
  spec.validate();
  if (!(y.t() > 0))
    throw DomainError("active_partition_cubes: t must be > 0");
  std::vector<ActiveBump> active;
  gather_active(y, spec, active);
  std::vector<CubeIndex> out;
  out.reserve(active.size());
  for (const ActiveBump& ab : active) out.push_back(ab.cube);
  return out;
}

BoundaryGridFunction trace_level(const ScalarField& f, int k,
                                 const Box& region, int* flagged) {
  if (k < 0) throw LevelOutOfRange("trace_level: level must be >= 0");
  if (f.dim < 2) throw DomainError("trace_level: field must live in R^{d+1}");
  if (!region.valid() || region.size() != f.dim - 1)
    throw DomainError("trace_level: region must be a bounded d-box");

  const std::vector<CubeIndex> cubes = level_cubes(k, region);
  std::vector<double> vals(cubes.size());
  std::vector<unsigned char> miss(cubes.size(), 0);
  parallel_for(cubes.size(), [&](std::size_t i) {
    const AverageResult r =
        cube_average(f, inflated_whitney(cubes[i]), Measure::lebesgue());
    vals[i] = r.value;
    miss[i] = r.converged ? 0 : 1;
  });

  int bad = 0;
  for (unsigned char m : miss) bad += m;
  if (bad && !flagged)
    throw QuadratureNonConvergence(
        "trace_level: " + std::to_string(bad) +
        " cube averages missed tolerance at level " + std::to_string(k));
  if (flagged) *flagged += bad;

  BoundaryGridFunction g;
  g.level = k;
  g.dim = f.dim - 1;
  g.support = region;
  g.values.reserve(cubes.size());
  for (std::size_t i = 0; i < cubes.size(); ++i)
    g.values.emplace(cubes[i], vals[i]);
  return g;
}

TraceDiagnostics trace_diagnostics(const ScalarField& f, int k_max, double p,
                                   const Box& region,
                                   const std::vector<Point>& probes) {
  if (k_max < 1) throw InvalidParams("trace_diagnostics: k_max must be >= 1");
  if (!(p >= 1)) throw InvalidParams("trace_diagnostics: p must be >= 1");
  std::vector<Point> px = probes;
  if (px.empty()) px.push_back(Point::zeros(f.dim - 1));

  int flagged = 0;
  TraceDiagnostics out;
  std::vector<std::vector<double>> probe_runs(px.size());

  // Probe values come from the defining average directly, so a probe point
  // outside `region` is still meaningful.
  auto probe_value = [&](const Point& x, int k) {
    const AverageResult r = cube_average(f, inflated_whitney(locate(x, k)),
                                         Measure::lebesgue());
    if (!r.converged) ++flagged;
    return r.value;
  };
  for (int k = 0; k <= k_max; ++k) {
    out.levels.push_back(k);
    for (std::size_t i = 0; i < px.size(); ++i) {
      const double v = probe_value(px[i], k);
      out.pointwise_probe.emplace_back(px[i], v);
      probe_runs[i].push_back(v);
    }
  }

  BoundaryGridFunction prev = trace_level(f, 0, region, &flagged);
  const double base_norm = boundary_lp_norm(prev, p);
  for (int k = 0; k < k_max; ++k) {
    BoundaryGridFunction cur = trace_level(f, k + 1, region, &flagged);
    const double vol = pow2(-cur.level * cur.dim);
    NeumaierSum diff;
    for (const CubeIndex& Q : cur.sorted_cubes()) {
      const double dv =
          cur.values.at(Q) - prev.value_of(ancestor_at(Q, prev.level));
      diff.add(vol * std::pow(std::abs(dv), p));
    }
    out.cauchy_lp.push_back(std::pow(diff.value(), 1.0 / p));
    prev = std::move(cur);
  }
  out.flagged = flagged;

  // Verdict.  Converging: the upper-half Cauchy tail is negligible against
  // ||T_0 f||.  Diverging: some probe magnitude grows by > 10% per doubling
  // of k across the last four levels.
  NeumaierSum tail;
  for (int k = (k_max + 1) / 2; k < k_max; ++k) tail.add(out.cauchy_lp[k]);
  if (tail.value() == 0.0 || tail.value() < 1e-3 * base_norm) {
    out.verdict = "converging";
    return out;
  }
  bool diverging = false;
  if (k_max >= 3) {
    for (const auto& run : probe_runs) {
      bool all = true;
      for (int k = k_max - 3; k <= k_max; ++k)
        if (!(std::abs(run[k]) > 1.1 * std::abs(run[k / 2]))) {
          all = false;
          break;
        }
      if (all) {
        diverging = true;
        break;
      }
    }
  }
  out.verdict = diverging ? "diverging" : "inconclusive";
  return out;
}

double extend_eval(const BoundaryGridFunction& g, const Point& y,
                   const PartitionSpec& spec) {
  spec.validate();
  if (!(y.t() > 0)) throw DomainError("extend_eval: t must be > 0");
  if (y.size() != g.dim + 1)
    throw DomainError("extend_eval: point must live in R^{d+1}");
  return extend_core(
      y, spec,
      [&g](const CubeIndex& S) { return grid_average(g, S); }, nullptr);
}

Point extend_grad(const BoundaryGridFunction& g, const Point& y,
                  const PartitionSpec& spec) {
  spec.validate();
  if (!(y.t() > 0)) throw DomainError("extend_grad: t must be > 0");
  if (y.size() != g.dim + 1)
    throw DomainError("extend_grad: point must live in R^{d+1}");
  Point grad = Point::zeros(y.size());
  extend_core(
      y, spec,
      [&g](const CubeIndex& S) { return grid_average(g, S); }, &grad);
  return grad;
}

namespace {

// Shared immutable state behind an extension field: the grid plus its
// selected-level coarsenings, so every ancestor average is a table lookup.
struct ExtensionTable {
  BoundaryGridFunction grid;
  std::map<int, BoundaryGridFunction> coarse;
  PartitionSpec spec;

  double avg(const CubeIndex& S) const {
    if (S.level == grid.level) return grid.value_of(S);
    if (S.level > grid.level)
      return grid.value_of(ancestor_at(S, grid.level));
    return coarse.at(S.level).value_of(S);
  }
};

}  // namespace

ScalarField extension_field(const BoundaryGridFunction& g,
                            const PartitionSpec& spec) {
  spec.validate();
  auto table = std::make_shared<ExtensionTable>();
  table->grid = g;
  table->spec = spec;
  for (int s = 1; s < g.level && s <= (1 << kLayerCap); s *= 2)
    table->coarse.emplace(s, coarsen_to(g, s));

  ScalarField F;
  F.dim = g.dim + 1;
  F.name = "extension";
  F.eval = [table](const Point& y) -> double {
    if (!(y.t() > 0)) return 0.0;
    return extend_core(
        y, table->spec, [&](const CubeIndex& S) { return table->avg(S); },
        nullptr);
  };
  F.grad = [table](const Point& y) -> Point {
    Point grad = Point::zeros(table->grid.dim + 1);
    if (!(y.t() > 0)) return grad;
    extend_core(
        y, table->spec, [&](const CubeIndex& S) { return table->avg(S); },
        &grad);
    return grad;
  };

  // Support: data cells inflated by the widest ancestor reach (a level-1
  // selected cell plus its collar, under 3/4), crossed with the strip up to
  // the top collar.
  const double top = (2.0 + spec.collar) / 2.0;
  Box hull;
  bool any = false;
  for (const auto& [q, v] : g.values) {
    const Box cell = realize(q);
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
  if (!any) hull = realize(CubeIndex(0, std::int64_t(0), g.dim));
  F.support = Box::cross(hull.inflated(0.75), 0.0, top);

  F.constant_probe = [table, top](const Box& box) -> std::optional<double> {
    const double a = box.t_lo(), b = box.t_hi();
    if (!(a > 0)) return std::nullopt;
    std::vector<int> levels;
    live_levels(a, b, table->spec.collar, levels);
    std::optional<double> common;
    std::size_t visited = 0;
    for (int k : levels) {
      const double l = pow2(-k);
      const int d = table->grid.dim;
      std::array<std::int64_t, 3> lo{}, hi{};
      for (int i = 0; i < d; ++i) {
        lo[i] = std::int64_t(std::floor(box.lo[i] / l)) - 2;
        hi[i] = std::int64_t(std::floor(box.hi[i] / l)) + 2;
      }
      std::array<std::int64_t, 3> m = lo;
      for (;;) {
        if (++visited > 2000) return std::nullopt;
        CubeIndex Q;
        Q.level = k;
        Q.dim = d;
        for (int i = 0; i < d; ++i) Q.m[i] = m[i];
        const double v = table->avg(selected_ancestor(Q));
        if (!common)
          common = v;
        else if (*common != v)
          return std::nullopt;
        int i = 0;
        while (i < d && ++m[i] > hi[i]) {
          m[i] = lo[i];
          ++i;
        }
        if (i == d) break;
      }
    }
    if (!common) return 0.0;  // no bump reaches the box: E g vanishes there
    if (*common == 0.0 || b <= top) return common;
    return std::nullopt;  // constant below the top collar, zero above it
  };

  if (spec.collar == 0.25) {
    // Kinks of the trapezoid family lie on the quarter-edge lattice of the
    // finest level active at the box's bottom; aligned cells keep each
    // quadrature panel on one smooth rational piece.
    F.init_cells = [](const Box& box) {
      const double t_lo = box.t_lo();
      if (!(t_lo > 0)) return 32;
      const int k_act =
          std::min(30, int(std::ceil(std::log2(2.25 / t_lo))) - 1);
      const double step = pow2(-k_act) / 4.0;
      const int cells = int(std::ceil(box.max_extent() / step - 1e-9));
      return std::clamp(cells, 1, 32);
    };
  }
  return F;
}

}  // namespace tracelab
