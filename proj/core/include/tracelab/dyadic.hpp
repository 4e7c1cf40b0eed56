#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "tracelab/geometry.hpp"

namespace tracelab {

// Dyadic semi-open cube 2^{-k}((0,1]^d + m).  Identity is pure integer data;
// no floating point enters the cube algebra, so neighbor/ancestor relations
// and tilings are exact.
struct CubeIndex {
  int level = 0;  // edge = 2^{-level}; negative levels are coarser than unit
  int dim = 1;
  std::array<std::int64_t, 3> m{};  // entries beyond dim stay zero

  CubeIndex() = default;
  CubeIndex(int level_, std::int64_t m0, int dim_ = 1) : level(level_), dim(dim_) {
    m[0] = m0;
  }
  CubeIndex(int level_, std::initializer_list<std::int64_t> ms) : level(level_) {
    dim = int(ms.size());
    int i = 0;
    for (auto v : ms) m[i++] = v;
  }

  friend bool operator==(const CubeIndex&, const CubeIndex&) = default;
  friend auto operator<=>(const CubeIndex&, const CubeIndex&) = default;
};

struct CubeIndexHash {
  std::size_t operator()(const CubeIndex& q) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull ^ std::uint64_t(q.level);
    auto mix = [&h](std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 0xff51afd7ed558ccdull;
    };
    mix(std::uint64_t(q.dim));
    for (int i = 0; i < 3; ++i) mix(std::uint64_t(q.m[i]));
    return std::size_t(h);
  }
};

// Selected layers are levels 2^j; layer j = -1 is an alias for level 1
// (the convention unifying Q_{d,1/2} with Q_{d,1}).
inline int layer_level(int j) { return j <= 0 ? 1 : 1 << j; }
inline constexpr int kLayerCap = 4;  // finest selected layer: level 2^4 = 16

double edge_length(const CubeIndex& Q);
Box realize(const CubeIndex& Q);
Point cube_center(const CubeIndex& Q);
CubeIndex locate(const Point& x, int level);

// Ancestor at a coarser (or equal) level; floor-shifts the multi-index.
CubeIndex ancestor_at(const CubeIndex& Q, int level);

bool closures_touch(const CubeIndex& a, const CubeIndex& b);

// ~ relation: edge ratio in [1/2, 2] and touching closures; includes Q.
std::vector<CubeIndex> neighbors(const CubeIndex& Q);

// The relation backing the Besov sums: cubes of Q's layer and the next
// coarser selected layer whose closures meet Q's.  Includes Q.
std::vector<CubeIndex> selected_neighbors(const CubeIndex& Q);

// S(Q): the selected-layer dyadic ancestor, level 2^j with 2^j <= k < 2^{j+1}.
CubeIndex selected_ancestor(const CubeIndex& Q);

Box whitney_box(const CubeIndex& Q);       // Q x (2^-k, 2^-k+1]
Box inflated_whitney(const CubeIndex& Q);  // the l(Q)/4 box-neighborhood of W(Q)

// Per-axis inclusive multi-index ranges of the level cubes whose realization
// meets `region`; the cube set is the product of the ranges.  Empty result
// means no cube meets the region.  Lets callers address cube #i directly,
// which the norm sweeps use to parcel work without materializing cubes.
std::vector<std::pair<std::int64_t, std::int64_t>> level_cube_ranges(
    int level, const Box& region);

// All cubes of the given level whose realization meets `region` (a d-box),
// streamed without materializing anything outside.
void for_each_level_cube(int level, const Box& region,
                         const std::function<void(const CubeIndex&)>& fn);
std::vector<CubeIndex> level_cubes(int level, const Box& region);

// Same, for a selected layer; j in [-1, kLayerCap].
std::vector<CubeIndex> layer_cubes(int j, const Box& region);

}  // namespace tracelab
