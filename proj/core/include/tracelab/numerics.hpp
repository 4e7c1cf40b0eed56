#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

namespace tracelab {

inline double pow2(int k) { return std::ldexp(1.0, k); }

// Neumaier's variant of Kahan summation.  Order-stable totals are part of the
// concurrency contract: parallel reductions accumulate per-block partials with
// this and merge them in a fixed block order, so results do not depend on the
// number of worker threads.
struct NeumaierSum {
  double s = 0.0;
  double c = 0.0;

  void add(double x) {
    double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  void add(const NeumaierSum& o) {
    add(o.s);
    add(o.c);
  }
  double value() const { return s + c; }
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares y ~ slope*x + intercept.
inline LineFit fit_line(const std::vector<double>& xs,
                        const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / double(n), my = sy / double(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  return f;
}

// Gauss-Legendre nodes/weights on [-1, 1], computed once per order by Newton
// iteration on P_n and cached.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int order);

struct IntegralResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
};

// Adaptive Gauss-Kronrod (G7,K15) over a finite interval with a bisection
// stack.  Each segment must meet its length-proportional share of
// max(abs_tol, rel_tol * |running total|).
IntegralResult adaptive_integrate(const std::function<double(double)>& f,
                                  double a, double b, double abs_tol,
                                  double rel_tol, int max_segments = 4000);

// Deterministic uniform sampling.  mt19937_64's output sequence is pinned by
// the standard; the double conversion uses the top 53 bits directly so no
// distribution object (whose algorithm is implementation-defined) is involved.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform01() { return double(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }
  std::int64_t uniform_int(std::int64_t n) {  // in [0, n)
    return std::int64_t(uniform01() * double(n));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace tracelab
