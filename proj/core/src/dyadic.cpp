#include "tracelab/dyadic.hpp"

#include <cmath>

#include "tracelab/errors.hpp"
#include "tracelab/numerics.hpp"

namespace tracelab {

namespace {

std::int64_t floor_div2(std::int64_t v) {
  return v >= 0 ? v / 2 : (v - 1) / 2;
}

std::int64_t floor_shift(std::int64_t v, int s) {
  // C++20 guarantees arithmetic right shift for signed operands.
  return v >> s;
}

void check_level(int level) {
  if (level < -30 || level > 30)
    throw LevelOutOfRange("cube level " + std::to_string(level) +
                          " outside supported range [-30, 30]");
}

}  // namespace

double edge_length(const CubeIndex& Q) { return pow2(-Q.level); }

Box realize(const CubeIndex& Q) {
  const double l = edge_length(Q);
  Point lo = Point::zeros(Q.dim), hi = Point::zeros(Q.dim);
  for (int i = 0; i < Q.dim; ++i) {
    lo[i] = l * double(Q.m[i]);
    hi[i] = l * double(Q.m[i] + 1);
  }
  return Box(lo, hi);
}

Point cube_center(const CubeIndex& Q) {
  const double l = edge_length(Q);
  Point c = Point::zeros(Q.dim);
  for (int i = 0; i < Q.dim; ++i) c[i] = l * (double(Q.m[i]) + 0.5);
  return c;
}

CubeIndex locate(const Point& x, int level) {
  check_level(level);
  CubeIndex Q;
  Q.level = level;
  Q.dim = x.size();
  for (int i = 0; i < x.size(); ++i) {
    // Semi-open convention: the cube containing x has m = ceil(2^k x) - 1,
    // which sends boundary points to the lower cube.
    const double scaled = std::ldexp(x[i], level);
    Q.m[i] = std::int64_t(std::ceil(scaled)) - 1;
  }
  return Q;
}

CubeIndex ancestor_at(const CubeIndex& Q, int level) {
  if (level > Q.level)
    throw LevelError("ancestor_at: target level finer than the cube");
  CubeIndex P;
  P.level = level;
  P.dim = Q.dim;
  const int shift = Q.level - level;
  for (int i = 0; i < Q.dim; ++i) P.m[i] = floor_shift(Q.m[i], shift);
  return P;
}

bool closures_touch(const CubeIndex& a, const CubeIndex& b) {
  if (a.dim != b.dim) return false;
  // Compare at the finer of the two levels with exact integer endpoints:
  // the closure of a cube with index m spans [m, m+1] at its own scale.
  const int fine = a.level > b.level ? a.level : b.level;
  const int sa = fine - a.level, sb = fine - b.level;
  for (int i = 0; i < a.dim; ++i) {
    const std::int64_t alo = a.m[i] << sa, ahi = (a.m[i] + 1) << sa;
    const std::int64_t blo = b.m[i] << sb, bhi = (b.m[i] + 1) << sb;
    if (ahi < blo || bhi < alo) return false;
  }
  return true;
}

namespace {

// Odometer sweep over per-axis candidate lists, assembling cubes at `level`.
template <class Fn>
void product_sweep(int level, int dim,
                   const std::array<std::vector<std::int64_t>, 3>& axis,
                   const Fn& fn) {
  std::array<std::size_t, 3> idx{};
  for (;;) {
    CubeIndex Q;
    Q.level = level;
    Q.dim = dim;
    for (int i = 0; i < dim; ++i) Q.m[i] = axis[i][idx[i]];
    fn(Q);
    int axis_i = 0;
    while (axis_i < dim && ++idx[axis_i] == axis[axis_i].size()) {
      idx[axis_i] = 0;
      ++axis_i;
    }
    if (axis_i == dim) break;
  }
}

}  // namespace

std::vector<CubeIndex> neighbors(const CubeIndex& Q) {
  check_level(Q.level + 1);
  std::vector<CubeIndex> out;
  out.reserve(Q.dim == 1 ? 9 : Q.dim == 2 ? 29 : 99);

  std::array<std::vector<std::int64_t>, 3> axis;
  // Same level: the 3^d cubes sharing a closure point.
  for (int i = 0; i < Q.dim; ++i)
    axis[i] = {Q.m[i] - 1, Q.m[i], Q.m[i] + 1};
  product_sweep(Q.level, Q.dim, axis, [&](const CubeIndex& c) { out.push_back(c); });

  // One level coarser: exactly two touching indices per axis.
  for (int i = 0; i < Q.dim; ++i) {
    const std::int64_t a = floor_div2(Q.m[i] - 1), b = floor_div2(Q.m[i] + 1);
    axis[i] = a == b ? std::vector<std::int64_t>{a} : std::vector<std::int64_t>{a, b};
  }
  product_sweep(Q.level - 1, Q.dim, axis, [&](const CubeIndex& c) { out.push_back(c); });

  // One level finer: indices 2m-1 .. 2m+2 touch per axis.
  for (int i = 0; i < Q.dim; ++i)
    axis[i] = {2 * Q.m[i] - 1, 2 * Q.m[i], 2 * Q.m[i] + 1, 2 * Q.m[i] + 2};
  product_sweep(Q.level + 1, Q.dim, axis, [&](const CubeIndex& c) { out.push_back(c); });

  return out;
}

std::vector<CubeIndex> selected_neighbors(const CubeIndex& Q) {
  const int n = Q.level;
  if (n < 1 || (n & (n - 1)) != 0)
    throw NotSelectedLayer("selected_neighbors: level " + std::to_string(n) +
                           " is not 2^j");
  std::vector<CubeIndex> out;
  std::array<std::vector<std::int64_t>, 3> axis;
  for (int i = 0; i < Q.dim; ++i)
    axis[i] = {Q.m[i] - 1, Q.m[i], Q.m[i] + 1};
  product_sweep(n, Q.dim, axis, [&](const CubeIndex& c) { out.push_back(c); });

  // The next coarser selected layer.  For j = 0 both layers are level 1
  // (the Q_{d,1/2} = Q_{d,1} unification), so there is nothing to add.
  // Consecutive selected layers sit n - n/2 dyadic levels apart (4 -> 2 is
  // two halvings), so the index map is a floor shift by that gap; the
  // touching coarser indices per axis are the shifts of m - 1 and m + 1.
  if (n > 1) {
    const int gap = n - n / 2;
    for (int i = 0; i < Q.dim; ++i) {
      const std::int64_t a = floor_shift(Q.m[i] - 1, gap),
                         b = floor_shift(Q.m[i] + 1, gap);
      axis[i] = a == b ? std::vector<std::int64_t>{a} : std::vector<std::int64_t>{a, b};
    }
    product_sweep(n / 2, Q.dim, axis, [&](const CubeIndex& c) { out.push_back(c); });
  }
  return out;
}

CubeIndex selected_ancestor(const CubeIndex& Q) {
  if (Q.level < 1)
    throw LevelOutOfRange("selected_ancestor: needs level >= 1, got " +
                          std::to_string(Q.level));
  check_level(Q.level);
  int j = 0;
  while ((2 << j) <= Q.level) ++j;  // 2^j <= level < 2^{j+1}
  return ancestor_at(Q, 1 << j);
}

Box whitney_box(const CubeIndex& Q) {
  const double l = edge_length(Q);
  return Box::cross(realize(Q), l, 2 * l);
}

Box inflated_whitney(const CubeIndex& Q) {
  const double l = edge_length(Q);
  Box base = realize(Q).inflated(l / 4);
  return Box::cross(base, 0.75 * l, 2.25 * l);
}

std::vector<std::pair<std::int64_t, std::int64_t>> level_cube_ranges(
    int level, const Box& region) {
  check_level(level);
  if (!region.valid()) return {};
  const int dim = region.size();
  const double l = pow2(-level);
  std::vector<std::pair<std::int64_t, std::int64_t>> ranges(dim);
  for (int i = 0; i < dim; ++i) {
    // Smallest m with l(m+1) > region.lo, largest with lm < region.hi.
    // Start from one-off float guesses and walk to the exact boundary, so
    // rounding in the division can never drop or duplicate a cube.
    std::int64_t a = std::int64_t(std::floor(region.lo[i] / l)) - 1;
    while (l * double(a + 1) <= region.lo[i]) ++a;
    std::int64_t b = std::int64_t(std::ceil(region.hi[i] / l));
    while (l * double(b) >= region.hi[i]) --b;
    if (b < a) return {};
    ranges[i] = {a, b};
  }
  return ranges;
}

void for_each_level_cube(int level, const Box& region,
                         const std::function<void(const CubeIndex&)>& fn) {
  const auto ranges = level_cube_ranges(level, region);
  if (ranges.empty()) return;
  const int dim = int(ranges.size());
  std::array<std::int64_t, 3> lo{}, hi{};
  for (int i = 0; i < dim; ++i) {
    lo[i] = ranges[i].first;
    hi[i] = ranges[i].second;
  }
  std::array<std::int64_t, 3> m = lo;
  for (;;) {
    CubeIndex Q;
    Q.level = level;
    Q.dim = dim;
    for (int i = 0; i < dim; ++i) Q.m[i] = m[i];
    fn(Q);
    int i = 0;
    while (i < dim && ++m[i] > hi[i]) {
      m[i] = lo[i];
      ++i;
    }
    if (i == dim) break;
  }
}

std::vector<CubeIndex> level_cubes(int level, const Box& region) {
  std::vector<CubeIndex> out;
  for_each_level_cube(level, region, [&](const CubeIndex& Q) { out.push_back(Q); });
  return out;
}

std::vector<CubeIndex> layer_cubes(int j, const Box& region) {
  if (j < -1 || j > kLayerCap)
    throw LevelOutOfRange("layer_cubes: layer " + std::to_string(j) +
                          " outside [-1, " + std::to_string(kLayerCap) + "]");
  return level_cubes(layer_level(j), region);
}

}  // namespace tracelab
