#pragma once

#include <array>
#include <cassert>
#include <cstdint>
#include <string>

#include "tracelab/errors.hpp"

namespace tracelab {

// Points live in R^n with n <= 4: up to three horizontal axes plus the
// vertical coordinate t, which by convention is always the *last* component
// of a point in the upper half-space.
inline constexpr int kMaxDim = 4;

struct Point {
  std::array<double, kMaxDim> v{};
  int n = 0;

  Point() = default;
  Point(std::initializer_list<double> init) {
    assert(init.size() <= kMaxDim);
    for (double c : init) v[n++] = c;
  }
  static Point zeros(int n_) {
    Point p;
    p.n = n_;
    return p;
  }

  int size() const { return n; }
  double operator[](int i) const { return v[i]; }
  double& operator[](int i) { return v[i]; }
  double t() const { return v[n - 1]; }  // vertical coordinate of a body point

  // x' = the horizontal part (drops the last coordinate).
  Point horizontal() const {
    Point p;
    p.n = n - 1;
    for (int i = 0; i + 1 < n; ++i) p.v[i] = v[i];
    return p;
  }
  // Appends t to a horizontal point.
  Point lifted(double t_) const {
    Point p = *this;
    p.v[p.n++] = t_;
    return p;
  }

  friend bool operator==(const Point&, const Point&) = default;
};

// Axis-aligned semi-open box  prod_i (lo_i, hi_i].  The semi-open convention
// matches the dyadic cubes, so tilings really are disjoint.
struct Box {
  Point lo, hi;

  Box() = default;
  Box(Point lo_, Point hi_) : lo(lo_), hi(hi_) {
    assert(lo.size() == hi.size());
  }

  int size() const { return lo.size(); }
  double extent(int i) const { return hi[i] - lo[i]; }
  double max_extent() const {
    double m = 0;
    for (int i = 0; i < size(); ++i) m = m > extent(i) ? m : extent(i);
    return m;
  }
  double volume() const {
    double vol = 1;
    for (int i = 0; i < size(); ++i) vol *= extent(i);
    return vol;
  }
  bool valid() const {
    for (int i = 0; i < size(); ++i)
      if (!(lo[i] < hi[i])) return false;
    return size() > 0;
  }
  bool contains(const Point& x) const {
    for (int i = 0; i < size(); ++i)
      if (!(lo[i] < x[i] && x[i] <= hi[i])) return false;
    return true;
  }
  Point center() const {
    Point c = Point::zeros(size());
    for (int i = 0; i < size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
  }
  // Open-interval overlap test; touching closures do not count.
  bool overlaps(const Box& b) const {
    for (int i = 0; i < size(); ++i)
      if (!(lo[i] < b.hi[i] && b.lo[i] < hi[i])) return false;
    return true;
  }
  Box intersection(const Box& b) const {
    Box r = *this;
    for (int i = 0; i < size(); ++i) {
      r.lo[i] = lo[i] > b.lo[i] ? lo[i] : b.lo[i];
      r.hi[i] = hi[i] < b.hi[i] ? hi[i] : b.hi[i];
    }
    return r;
  }
  Box inflated(double margin) const {
    Box r = *this;
    for (int i = 0; i < size(); ++i) {
      r.lo[i] -= margin;
      r.hi[i] += margin;
    }
    return r;
  }
  // The horizontal footprint of a body box (drops the t axis).
  Box horizontal() const { return Box(lo.horizontal(), hi.horizontal()); }
  double t_lo() const { return lo[size() - 1]; }
  double t_hi() const { return hi[size() - 1]; }

  static Box cross(const Box& base, double t_lo, double t_hi) {
    return Box(base.lo.lifted(t_lo), base.hi.lifted(t_hi));
  }
};

inline std::string to_string(const Point& p) {
  std::string s = "(";
  for (int i = 0; i < p.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(p[i]);
  }
  return s + ")";
}

}  // namespace tracelab
