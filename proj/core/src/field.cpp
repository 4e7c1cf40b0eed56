#include "tracelab/field.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <sstream>

#include "tracelab/errors.hpp"
#include "tracelab/numerics.hpp"

namespace tracelab {

double mollifier_rho(double s) {
  if (s <= 1.0) return 1.0;
  if (s >= 2.0) return 0.0;
  const double w = s - 1.0;
  return std::exp(1.0 - 1.0 / (1.0 - w * w));
}

double mollifier_rho_prime(double s) {
  if (s <= 1.0 || s >= 2.0) return 0.0;
  const double w = s - 1.0;
  const double om = 1.0 - w * w;
  return mollifier_rho(s) * (-2.0 * w / (om * om));
}

double bump_value(const Point& x) {
  double v = 1.0;
  for (int i = 0; i < x.size(); ++i) v *= mollifier_rho(std::abs(x[i]));
  return v;
}

Point bump_gradient(const Point& x) {
  Point g = Point::zeros(x.size());
  std::array<double, kMaxDim> rho;
  for (int i = 0; i < x.size(); ++i) rho[i] = mollifier_rho(std::abs(x[i]));
  for (int i = 0; i < x.size(); ++i) {
    double partial = (x[i] < 0 ? -1.0 : 1.0) * mollifier_rho_prime(std::abs(x[i]));
    for (int j = 0; j < x.size(); ++j)
      if (j != i) partial *= rho[j];
    g[i] = partial;
  }
  return g;
}

void CounterexampleParams::validate() const {
  if (!(p >= 1.0)) throw InvalidParams("counterexample: p must be >= 1");
  if (p == 1.0) {
    if (beta != 0.0)
      throw InvalidParams("counterexample: beta must be 0 when p = 1");
  } else {
    if (!(beta > 0.0 && beta < 1.0 && beta * p > 1.0))
      throw InvalidParams(
          "counterexample: need 0 < beta < 1 < beta*p when p > 1");
  }
  if (dim < 1 || dim > 3) throw InvalidParams("counterexample: dim must be 1..3");
}

namespace {

// Cumulative G(W) = int_0^W dw / (1 + w^beta) on a geometric grid with
// cubic Hermite interpolation.  The grid is log-spaced because G'''' blows
// up like w^{beta-4} at 0; a constant ratio keeps the local error near
// 1e-9 uniformly.  Built once per field, immutable afterwards.
class VTable {
 public:
  explicit VTable(double beta) : beta_(beta) {
    const double w0 = 1e-14, cap = 16.0, ratio = 1.005;
    double w = w0;
    w_.push_back(w);
    g_.push_back(tiny_series(w));
    NeumaierSum acc;
    acc.add(g_.front());
    const GaussRule& rule = gauss_legendre(8);
    while (w < cap) {
      const double next = std::min(w * ratio, cap);
      const double mid = 0.5 * (w + next), half = 0.5 * (next - w);
      double seg = 0;
      for (int i = 0; i < 8; ++i)
        seg += half * rule.weights[i] * integrand(mid + half * rule.nodes[i]);
      acc.add(seg);
      w = next;
      w_.push_back(w);
      g_.push_back(acc.value());
    }
  }

  double integrand(double w) const { return 1.0 / (1.0 + std::pow(w, beta_)); }

  double value(double W) const {
    if (W <= w_.front()) return tiny_series(W);
    if (W >= w_.back())  // unreachably deep t; fall back to direct quadrature
      return g_.back() +
             adaptive_integrate([this](double w) { return integrand(w); },
                                w_.back(), W, 1e-12, 1e-10)
                 .value;
    const auto it = std::upper_bound(w_.begin(), w_.end(), W);
    const std::size_t i = std::size_t(it - w_.begin()) - 1;
    const double dw = w_[i + 1] - w_[i], u = (W - w_[i]) / dw;
    const double h0 = integrand(w_[i]), h1 = integrand(w_[i + 1]);
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * g_[i] + (u3 - 2 * u2 + u) * dw * h0 +
           (-2 * u3 + 3 * u2) * g_[i + 1] + (u3 - u2) * dw * h1;
  }

 private:
  double tiny_series(double W) const {
    // 1/(1+w^b) = 1 - w^b + O(w^{2b}); the next term is far below 1e-16
    // at W <= 1e-14.
    return W - std::pow(W, 1.0 + beta_) / (1.0 + beta_);
  }

  double beta_;
  std::vector<double> w_, g_;
};

}  // namespace

ScalarField counterexample_field(const CounterexampleParams& cp) {
  cp.validate();
  const int d = cp.dim;
  const double beta = cp.beta;
  std::shared_ptr<VTable> table =
      beta > 0.0 ? std::make_shared<VTable>(beta) : nullptr;

  // v(t) = int_t^1 ds/(s log(e/s)(1+log^beta log(e/s))); in the variable
  // W = log log(e/t) this is G(W), and G(W) = W/2 exactly when beta = 0.
  auto v = [table, beta](double t) -> double {
    if (t >= 1.0) return 0.0;
    const double W = std::log(1.0 - std::log(t));
    return beta == 0.0 ? 0.5 * W : table->value(W);
  };
  auto v_prime = [beta](double t) -> double {
    const double L = 1.0 - std::log(t);  // log(e/t)
    const double denom = beta == 0.0 ? 2.0 : 1.0 + std::pow(std::log(L), beta);
    return -1.0 / (t * L * denom);
  };

  ScalarField u;
  u.dim = d + 1;
  u.name = "counterexample";
  u.eval = [v, d](const Point& y) -> double {
    const double t = y[d];
    if (t >= 1.0 || t <= 0.0) return 0.0;
    const double vv = std::max(v(t), 0.0);
    if (vv == 0.0) return 0.0;
    return bump_value(y.horizontal()) * vv;
  };
  u.grad = [v, v_prime, d](const Point& y) -> Point {
    Point g = Point::zeros(d + 1);
    const double t = y[d];
    if (t >= 1.0 || t <= 0.0) return g;
    const Point x = y.horizontal();
    const double phi = bump_value(x);
    const Point dphi = bump_gradient(x);
    const double vt = v(t);
    for (int i = 0; i < d; ++i) g[i] = dphi[i] * vt;
    g[d] = phi * v_prime(t);
    return g;
  };
  Point lo = Point::zeros(d), hi = Point::zeros(d);
  for (int i = 0; i < d; ++i) {
    lo[i] = -2.0;
    hi[i] = 2.0;
  }
  u.support = Box::cross(Box(lo, hi), 0.0, 1.0);
  return u;
}

AverageResult cube_average(const ScalarField& f, const Box& region,
                           const Measure& measure, int order) {
  if (!region.valid()) throw DomainError("cube_average: malformed region");
  if (region.size() != f.dim)
    throw DomainError("cube_average: region dimension " +
                      std::to_string(region.size()) + " != field dimension " +
                      std::to_string(f.dim));
  if (f.constant_probe)
    if (auto c = f.constant_probe(region)) return {*c, true, 0};

  const double denom = measure.of_box(region);
  if (!f.support.valid() || !region.overlaps(f.support)) return {0.0, true, 0};
  const Box clipped = region.intersection(f.support);

  const int init = f.init_cells ? std::max(1, f.init_cells(clipped)) : 1;
  auto integrand = [&f](const Point& p, double* out) { out[0] = f.eval(p); };
  std::function<double(double)> tw;
  if (measure.kind == Measure::Kind::mu) {
    const WeightParams wp = measure.wp;
    const double norm = log_normalizer(wp.lambda);
    tw = [wp, norm](double t) { return omega(t, wp) / norm; };
  }
  TensorResult r = tensor_integrate(integrand, 1, clipped, tw, order, init);
  return {r.value[0] / denom, r.converged, r.refinements};
}

BoundaryGridFunction sample_to_grid(const ScalarField& f, int level,
                                    int* flagged_cells) {
  if (!f.support.valid())
    throw DomainError("sample_to_grid: field must declare bounded support");
  BoundaryGridFunction g;
  g.level = level;
  g.dim = f.dim;
  g.support = f.support;
  const Measure leb = Measure::lebesgue();
  for_each_level_cube(level, f.support, [&](const CubeIndex& Q) {
    AverageResult r = cube_average(f, realize(Q), leb);
    if (!r.converged && flagged_cells) ++*flagged_cells;
    g.values.emplace(Q, r.value);
  });
  return g;
}

double grid_average(const BoundaryGridFunction& g, const CubeIndex& Q) {
  if (Q.dim != g.dim) throw DomainError("grid_average: dimension mismatch");
  if (Q.level == g.level) return g.value_of(Q);
  if (Q.level > g.level) return g.value_of(ancestor_at(Q, g.level));

  const int shift = g.level - Q.level;
  const double count = pow2(shift * g.dim);
  if (shift * g.dim <= 12) {
    // Dense odometer over the descendant block.
    std::array<std::int64_t, 3> lo{}, m{};
    for (int i = 0; i < g.dim; ++i) lo[i] = Q.m[i] << shift;
    m = lo;
    const std::int64_t width = std::int64_t(1) << shift;
    NeumaierSum sum;
    for (;;) {
      CubeIndex c;
      c.level = g.level;
      c.dim = g.dim;
      for (int i = 0; i < g.dim; ++i) c.m[i] = m[i];
      sum.add(g.value_of(c));
      int i = 0;
      while (i < g.dim && ++m[i] == lo[i] + width) {
        m[i] = lo[i];
        ++i;
      }
      if (i == g.dim) break;
    }
    return sum.value() / count;
  }
  // Sparse: only stored entries contribute; sort for order-stable addition.
  std::vector<std::pair<CubeIndex, double>> inside;
  for (const auto& [cell, val] : g.values)
    if (ancestor_at(cell, Q.level) == Q) inside.emplace_back(cell, val);
  std::sort(inside.begin(), inside.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  NeumaierSum sum;
  for (const auto& [cell, val] : inside) sum.add(val);
  return sum.value() / count;
}

BoundaryGridFunction coarsen_to(const BoundaryGridFunction& g, int level) {
  if (level > g.level)
    throw LevelError("coarsen_to: target level finer than the grid");
  BoundaryGridFunction out;
  out.level = level;
  out.dim = g.dim;
  out.support = g.support;
  if (level == g.level) {
    out.values = g.values;
    return out;
  }
  const double count = pow2((g.level - level) * g.dim);
  std::unordered_map<CubeIndex, NeumaierSum, CubeIndexHash> sums;
  for (const CubeIndex& cell : g.sorted_cubes())
    sums[ancestor_at(cell, level)].add(g.value_of(cell));
  for (const auto& [parent, sum] : sums)
    out.values.emplace(parent, sum.value() / count);
  return out;
}

std::vector<CubeIndex> BoundaryGridFunction::sorted_cubes() const {
  std::vector<CubeIndex> keys;
  keys.reserve(values.size());
  for (const auto& [q, v] : values) keys.push_back(q);
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string serialize(const BoundaryGridFunction& g) {
  std::string out =
      "level=" + std::to_string(g.level) + " dim=" + std::to_string(g.dim) + "\n";
  for (const CubeIndex& Q : g.sorted_cubes()) {
    for (int i = 0; i < g.dim; ++i) {
      out += std::to_string(Q.m[i]);
      out += ' ';
    }
    out += format_double(g.values.at(Q));
    out += '\n';
  }
  return out;
}

BoundaryGridFunction deserialize_grid(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header))
    throw Error("deserialize_grid: empty input");
  BoundaryGridFunction g;
  if (std::sscanf(header.c_str(), "level=%d dim=%d", &g.level, &g.dim) != 2)
    throw Error("deserialize_grid: bad header '" + header + "'");
  if (g.dim < 1 || g.dim > 3)
    throw Error("deserialize_grid: unsupported dim");

  std::array<std::int64_t, 3> mn{}, mx{};
  bool any = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CubeIndex Q;
    Q.level = g.level;
    Q.dim = g.dim;
    const char* p = line.c_str();
    const char* end = p + line.size();
    for (int i = 0; i < g.dim; ++i) {
      while (p < end && *p == ' ') ++p;
      auto [next, ec] = std::from_chars(p, end, Q.m[i]);
      if (ec != std::errc())
        throw Error("deserialize_grid: bad index in '" + line + "'");
      p = next;
    }
    while (p < end && *p == ' ') ++p;
    double val;
    auto [next, ec] = std::from_chars(p, end, val);
    if (ec != std::errc())
      throw Error("deserialize_grid: bad value in '" + line + "'");
    g.values[Q] = val;
    for (int i = 0; i < g.dim; ++i) {
      mn[i] = any ? std::min(mn[i], Q.m[i]) : Q.m[i];
      mx[i] = any ? std::max(mx[i], Q.m[i]) : Q.m[i];
    }
    any = true;
  }
  if (any) {
    const double l = pow2(-g.level);
    Point lo = Point::zeros(g.dim), hi = Point::zeros(g.dim);
    for (int i = 0; i < g.dim; ++i) {
      lo[i] = l * double(mn[i]);
      hi[i] = l * double(mx[i] + 1);
    }
    g.support = Box(lo, hi);
  }
  return g;
}

}  // namespace tracelab
