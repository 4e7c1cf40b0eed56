#include <cmath>
#include <optional>

#include "doctest.h"
#include "oracles.hpp"
#include "tracelab/errors.hpp"
#include "tracelab/lab.hpp"
#include "tracelab/operators.hpp"

using namespace tracelab;

namespace {

// u(x, t) = t on a support wide enough that no inflated Whitney box is ever
// clipped by it; its trace averages are exact box midpoints.
ScalarField slope_field() {
  ScalarField f;
  f.dim = 2;
  f.name = "t";
  f.support = Box(Point{-8.0, 0.0}, Point{8.0, 4.0});
  f.eval = [](const Point& y) { return y[1]; };
  f.grad = [](const Point&) {
    Point g = Point::zeros(2);
    g[1] = 1.0;
    return g;
  };
  return f;
}

BoundaryGridFunction two_cell_grid(double a, double b) {
  BoundaryGridFunction g;
  g.level = 1;
  g.dim = 1;
  g.values[CubeIndex(1, 0)] = a;
  g.values[CubeIndex(1, 1)] = b;
  return g;
}

}  // namespace

TEST_SUITE("operators") {

TEST_CASE("partition spec gate") {
  CHECK_NOTHROW(PartitionSpec{0.25, true}.validate());
  CHECK_NOTHROW(PartitionSpec{0.1, false}.validate());
  CHECK_THROWS_AS((PartitionSpec{0.0, true}.validate()), InvalidParams);
  CHECK_THROWS_AS((PartitionSpec{0.3, true}.validate()), InvalidParams);
  CHECK_THROWS_AS((PartitionSpec{-0.1, true}.validate()), InvalidParams);
}

TEST_CASE("trapezoid bump values on a single cube") {
  // Q = (2,1): Whitney box (1/4,1/2] x (1/4,1/2], edge 1/4, collar 1/16.
  const CubeIndex Q(2, 1);
  const PartitionSpec spec;
  CHECK(raw_bump(Q, Point{0.375, 0.375}, spec) == 1.0);
  CHECK(raw_bump(Q, Point{0.25, 0.375}, spec) == 1.0);   // closed face
  CHECK(raw_bump(Q, Point{0.5, 0.5}, spec) == 1.0);      // closed corner
  // 1/32 beyond a face is halfway through the collar.
  CHECK(raw_bump(Q, Point{0.25 - 1.0 / 32, 0.375}, spec) == 0.5);
  CHECK(raw_bump(Q, Point{0.5 + 1.0 / 32, 0.375}, spec) == 0.5);
  CHECK(raw_bump(Q, Point{0.375, 0.25 - 1.0 / 32}, spec) == 0.5);
  CHECK(raw_bump(Q, Point{0.375, 0.5 + 1.0 / 32}, spec) == 0.5);
  // Axis factors multiply at a collar corner.
  CHECK(raw_bump(Q, Point{0.25 - 1.0 / 32, 0.5 + 1.0 / 32}, spec) == 0.25);
  // The collar's outer edge and beyond.
  CHECK(raw_bump(Q, Point{0.25 - 1.0 / 16, 0.375}, spec) == 0.0);
  CHECK(raw_bump(Q, Point{0.7, 0.375}, spec) == 0.0);
  CHECK_THROWS_AS(raw_bump(Q, Point{0.375}, spec), DomainError);
}

TEST_CASE("bumps sum to one under the top collar") {
  const PartitionSpec spec;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Point y{rng.uniform(-2.0, 2.0), rng.uniform(1e-6, 1.0)};
    const auto active = active_partition_cubes(y, spec);
    REQUIRE(!active.empty());
    double sum = 0;
    for (const CubeIndex& Q : active) sum += partition_value(Q, y, spec);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  // The unit-strip family tops out at t = (2 + collar)/2.
  CHECK(!active_partition_cubes(Point{0.3, 1.06}, spec).empty());
  CHECK(active_partition_cubes(Point{0.3, 1.125}, spec).empty());
  CHECK(active_partition_cubes(Point{0.3, 1.2}, spec).empty());
  CHECK(extend_eval(two_cell_grid(4, 7), Point{0.3, 1.2}, spec) == 0.0);

  CHECK_THROWS_AS(partition_value(CubeIndex(0, 0), Point{0.3, 0.5}, spec),
                  LevelOutOfRange);
  CHECK_THROWS_AS(partition_value(CubeIndex(2, 1), Point{0.3, -0.5}, spec),
                  DomainError);
  CHECK_THROWS_AS(active_partition_cubes(Point{0.3, 0.0}, spec), DomainError);

  // Without normalization the value is the raw trapezoid itself.
  const PartitionSpec raw{0.25, false};
  const Point z{0.26, 0.3};
  CHECK(partition_value(CubeIndex(2, 1), z, raw) ==
        raw_bump(CubeIndex(2, 1), z, raw));
  CHECK(partition_value(CubeIndex(2, 0), z, raw) ==
        raw_bump(CubeIndex(2, 0), z, raw));
}

TEST_CASE("an interior plateau point activates exactly one cube") {
  // At t = 0.375 only level 2 is alive (strict inequalities kill level 1),
  // and at x = 0.375 only the cube over (1/4,1/2] reaches the point.
  const PartitionSpec spec;
  const Point y{0.375, 0.375};
  const auto active = active_partition_cubes(y, spec);
  REQUIRE(active.size() == 1);
  CHECK(active[0] == CubeIndex(2, 1));
  CHECK(partition_value(CubeIndex(2, 1), y, spec) == 1.0);

  const Point g = extend_grad(two_cell_grid(4, 7), y, spec);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
}

TEST_CASE("trace averages of the linear profile") {
  const ScalarField f = slope_field();
  const Box region(Point{-1.0}, Point{1.0});
  const BoundaryGridFunction g = trace_level(f, 2, region);
  CHECK(g.level == 2);
  CHECK(g.dim == 1);
  REQUIRE(g.values.size() == 8);
  // Every inflated Whitney box at level 2 spans t in (3/16, 9/16]; the
  // average of t over it is 3/8 regardless of the cube.
  for (const auto& [q, v] : g.values)
    CHECK(v == doctest::Approx(0.375).epsilon(1e-14));

  // Region membership is by semi-open overlap.
  CHECK(trace_level(f, 2, Box(Point{0.0}, Point{0.26})).values.size() == 2);

  CHECK_THROWS_AS(trace_level(f, -1, region), LevelOutOfRange);
  ScalarField flat;
  flat.dim = 1;
  flat.support = Box(Point{0.0}, Point{1.0});
  flat.eval = [](const Point&) { return 1.0; };
  CHECK_THROWS_AS(trace_level(flat, 2, region), DomainError);
  CHECK_THROWS_AS(trace_level(f, 2, Box(Point{0.0, 0.0}, Point{1.0, 1.0})),
                  DomainError);
}

TEST_CASE("non-converged trace cells are flagged or fatal") {
  ScalarField wild;
  wild.dim = 2;
  wild.support = Box(Point{-8.0, 0.0}, Point{8.0, 4.0});
  wild.eval = [](const Point& y) { return std::sin(613.0 * y[0]) * (1 + y[1]); };
  const Box region(Point{0.0}, Point{1.0});
  int flagged = 0;
  trace_level(wild, 0, region, &flagged);
  CHECK(flagged >= 1);
  CHECK_THROWS_AS(trace_level(wild, 0, region), QuadratureNonConvergence);
}

TEST_CASE("diagnostics call a constant field converging") {
  ScalarField c;
  c.dim = 2;
  c.support = Box(Point{-8.0, 0.0}, Point{8.0, 4.0});
  c.eval = [](const Point&) { return 2.0; };
  const TraceDiagnostics d =
      trace_diagnostics(c, 5, 2.0, Box(Point{-3.0}, Point{3.0}));
  CHECK(d.verdict == "converging");
  CHECK(d.flagged == 0);
  REQUIRE(d.levels.size() == 6);
  REQUIRE(d.cauchy_lp.size() == 5);
  for (double step : d.cauchy_lp) CHECK(step <= 1e-12);
  REQUIRE(d.pointwise_probe.size() == 6);  // default probe: the origin
  for (const auto& [x, v] : d.pointwise_probe)
    CHECK(v == doctest::Approx(2.0).epsilon(1e-12));

  CHECK_THROWS_AS(trace_diagnostics(c, 0, 2.0, Box(Point{-3.0}, Point{3.0})),
                  InvalidParams);
  CHECK_THROWS_AS(trace_diagnostics(c, 4, 0.5, Box(Point{-3.0}, Point{3.0})),
                  InvalidParams);
}

TEST_CASE("diagnostics catch the blowup profile") {
  const ScalarField u = counterexample_field({1, -1, 0, 1});
  const TraceDiagnostics d =
      trace_diagnostics(u, 8, 1.0, Box(Point{-1.0}, Point{1.0}));
  CHECK(d.verdict == "diverging");
  // The origin probe grows like log k: strictly increasing all the way.
  REQUIRE(d.pointwise_probe.size() == 9);
  for (int k = 1; k <= 8; ++k)
    CHECK(d.pointwise_probe[k].second > d.pointwise_probe[k - 1].second);
}

TEST_CASE("extension reproduces locally constant data") {
  const PartitionSpec spec;
  const BoundaryGridFunction g = two_cell_grid(4, 7);

  // Deep into either cell every contributing ancestor average is the cell
  // value, so the normalized bump sum collapses to it.
  CHECK(extend_eval(g, Point{0.3, 0.1}, spec) == doctest::Approx(4.0).epsilon(1e-13));
  CHECK(extend_eval(g, Point{0.3, 0.2}, spec) == doctest::Approx(4.0).epsilon(1e-13));
  CHECK(extend_eval(g, Point{0.8, 0.1}, spec) == doctest::Approx(7.0).epsilon(1e-13));

  CHECK_THROWS_AS(extend_eval(g, Point{0.3, 0.0}, spec), DomainError);
  CHECK_THROWS_AS(extend_eval(g, Point{0.3}, spec), DomainError);
  CHECK_THROWS_AS(extend_grad(g, Point{0.3, -1.0}, spec), DomainError);
}

TEST_CASE("extension gradient agrees with differences") {
  const PartitionSpec spec;
  Rng rng(11);
  const BoundaryGridFunction g = random_grid(3, 1, rng);
  auto eval = [&](const Point& y) { return extend_eval(g, y, spec); };
  for (int i = 0; i < 20; ++i) {
    const Point y{rng.uniform(-0.2, 1.2), rng.uniform(0.05, 1.05)};
    const Point a = extend_grad(g, y, spec);
    const Point fd = oracles::fd_gradient(eval, y, 1e-7);
    const double na = std::hypot(a[0], a[1]);
    const double diff = std::hypot(a[0] - fd[0], a[1] - fd[1]);
    CHECK(diff <= 1e-4 * (1.0 + na));
  }
}

TEST_CASE("extension field wrapper matches the raw operator") {
  const PartitionSpec spec;
  const BoundaryGridFunction g = two_cell_grid(4, 7);
  const ScalarField F = extension_field(g, spec);
  CHECK(F.dim == 2);
  CHECK(F.support.lo[0] == -0.75);
  CHECK(F.support.hi[0] == 1.75);
  CHECK(F.support.t_lo() == 0.0);
  CHECK(F.support.t_hi() == 1.125);

  for (const Point& y : {Point{0.3, 0.1}, Point{0.52, 0.37}, Point{0.9, 0.8},
                         Point{-0.1, 0.6}, Point{0.01, 0.02}}) {
    CHECK(F.eval(y) == extend_eval(g, y, spec));
    const Point a = F.grad(y);
    const Point b = extend_grad(g, y, spec);
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[1]);
  }

  // Constant detection: deep boxes inside one cell report its value, boxes
  // above the top collar report the literal zero, straddling boxes decline.
  REQUIRE(bool(F.constant_probe));
  const Box deep(Point{0.30, 0.001}, Point{0.31, 0.0011});
  const auto pv = F.constant_probe(deep);
  REQUIRE(pv.has_value());
  CHECK(*pv == 4.0);
  const Box above(Point{0.3, 1.2}, Point{0.4, 1.3});
  const auto pz = F.constant_probe(above);
  REQUIRE(pz.has_value());
  CHECK(*pz == 0.0);
  const Box straddle(Point{0.49, 0.01}, Point{0.52, 0.011});
  CHECK(!F.constant_probe(straddle).has_value());

  // Quadrature cell hint: aligned to the kink lattice near the box floor.
  REQUIRE(bool(F.init_cells));
  CHECK(F.init_cells(Box(Point{0.0, 0.3}, Point{1.0, 0.4})) == 16);
}

}  // TEST_SUITE
