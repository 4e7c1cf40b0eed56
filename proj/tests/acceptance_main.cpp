// Acceptance gate for the borderline trace/extension machinery.  Each check
// below exercises one end-to-end claim the library is built around, prints a
// single [PASS]/[FAIL] line with its wall time, and the process exits nonzero
// if anything fails.  Tolerances are pinned next to the quantity they bound.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "tracelab/dyadic.hpp"
#include "tracelab/field.hpp"
#include "tracelab/lab.hpp"
#include "tracelab/norms.hpp"
#include "tracelab/numerics.hpp"
#include "tracelab/operators.hpp"
#include "tracelab/quadrature.hpp"
#include "tracelab/weight.hpp"

#include "oracles.hpp"

namespace {

using namespace tracelab;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    append(what);
  }
  // Context shown on the PASS line; failures own the detail text.
  void info(const std::string& what) {
    if (ok) append(what);
  }

 private:
  void append(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// --- 1 -----------------------------------------------------------------
// The Muckenhoupt scan over (0, 2^-k] must separate four regimes of
// (p, alpha, lambda): bounded ratios off the borderline, (k+2)^(p-1) growth
// on the borderline inside the admissible wedge, a divergent dual factor
// below the wedge, and outright A_1 failure for p = 1 with a decaying log.
Outcome check_ap_dichotomy() {
  Outcome out;
  const auto start = Clock::now();
  const double slope_tol = 0.1;  // on fitted log-log exponents
  const int k_scan = 12;         // window for the finiteness clauses
  const int k_fit = 200;         // asymptotic window for the growth exponent

  auto all_finite = [](const ApScanResult& s) {
    for (const auto& r : s.rows)
      if (!std::isfinite(r.ratio)) return false;
    return true;
  };

  for (double lambda : {-2.0, 2.0}) {
    auto scan = ap_scan(WeightParams{2, 0.5, lambda, 1}, k_scan);
    out.require(all_finite(scan),
                "off-borderline ratio diverged (lambda=" + fmt(lambda) + ")");
    // The ratio converges like (4/3)(1 + c(lambda)/log(4 * 2^k)), so the
    // k <= 12 window still carries a slope near 0.3 for lambda = -2.
    // Flatness is an asymptotic claim: fit it on the deep window.
    auto flat = ap_scan(WeightParams{2, 0.5, lambda, 1}, k_fit);
    out.require(std::abs(flat.fitted_exponent) <= slope_tol,
                "off-borderline growth " + fmt(flat.fitted_exponent) +
                    " (lambda=" + fmt(lambda) + ")");
  }

  auto border = ap_scan(WeightParams{2, 1, 3, 1}, k_scan);
  out.require(all_finite(border), "borderline ratios should stay finite");
  out.require(border.verdict == ApVerdict::blows_up,
              "borderline verdict: " + to_string(border.verdict));
  // The log-scale transient decays like 1/log(4 * 2^k): the fitted exponent
  // only settles near p - 1 once the window sits past k ~ 64.
  auto deep = ap_scan(WeightParams{2, 1, 3, 1}, k_fit);
  out.require(std::abs(deep.fitted_exponent - 1.0) <= slope_tol,
              "borderline growth exponent " + fmt(deep.fitted_exponent));

  auto dual = ap_scan(WeightParams{2, 1, 1, 1}, k_scan);
  out.require(dual.verdict == ApVerdict::dual_diverges,
              "below-wedge verdict: " + to_string(dual.verdict));
  for (const auto& r : dual.rows)
    out.require(std::isinf(r.right_factor),
                "dual factor finite at k=" + std::to_string(r.k));

  auto a1 = ap_scan(WeightParams{1, 0, -1, 1}, k_scan);
  out.require(to_string(a1.verdict) == "A_1 fails",
              "p=1 verdict: " + to_string(a1.verdict));
  for (const auto& r : a1.rows)
    out.require(std::isinf(r.ratio),
                "A_1 ratio finite at k=" + std::to_string(r.k));

  const double secs = seconds_since(start);
  out.require(secs < 30.0, "took " + fmt(secs) + " s (cap 30)");
  out.info("borderline growth " + fmt(deep.fitted_exponent));
  return out;
}

// --- 2 -----------------------------------------------------------------
// The p = 1, lambda = -1 counterexample has a finite weighted Sobolev norm
// (truncations Cauchy in the cutoff) while its trace averages at the origin
// grow at the log-log rate, so no bounded trace can exist there.
Outcome check_counterexample() {
  Outcome out;
  const auto start = Clock::now();
  const double cauchy_tol = 0.01;   // per halving of the cutoff eps
  const double growth_floor = 0.4;  // T_k u(0) >= floor * log(1 + k log 2)

  auto u = counterexample_field(CounterexampleParams{1, -1, 0, 1});
  const WeightParams wp{1, 0, -1, 1};

  // One sweep down to 2^-20; every truncated norm is a prefix sum of slabs.
  auto slabs = sobolev_slab_masses(u, wp, 0x1p-20, 4.0, 4);
  auto truncated = [&](int e) {
    double total = 0;
    for (std::size_t i = 0; i < slabs.levels.size(); ++i)
      if (slabs.levels[i] <= e)
        total += slabs.value_mass[i] + slabs.grad_mass[i];
    return total;
  };
  double worst_step = 0;
  for (int e = 10; e < 20; ++e) {
    const double coarse = truncated(e), fine = truncated(e + 1);
    worst_step = std::max(worst_step, (fine - coarse) / fine);
  }
  out.require(worst_step <= cauchy_tol,
              "norm truncation moved " + fmt(worst_step) + " per halving");

  auto diag = trace_diagnostics(u, 16, 1.0, Box(Point{-3.0}, Point{3.0}));
  out.require(diag.verdict == "diverging", "verdict: " + diag.verdict);
  double prev = 0;
  for (int k = 6; k <= 16; ++k) {
    const double v = diag.pointwise_probe[std::size_t(k)].second;
    out.require(v >= growth_floor * std::log1p(k * std::log(2.0)),
                "T_" + std::to_string(k) + " u(0) = " + fmt(v) +
                    " under the log-log floor");
    if (k > 6)
      out.require(v > prev, "origin probe flat at k=" + std::to_string(k));
    prev = v;
  }

  const double secs = seconds_since(start);
  out.require(secs < 60.0, "took " + fmt(secs) + " s (cap 60)");
  std::string extra = diag.flagged
                          ? ", flagged " + std::to_string(diag.flagged)
                          : std::string();
  out.info("worst step " + fmt(worst_step) + ", T_16 u(0) = " +
           fmt(diag.pointwise_probe[16].second) + extra);
  return out;
}

// --- 3 -----------------------------------------------------------------
// Traces of the suite fields land in L^p with norms controlled by the
// weighted Sobolev norm, in both admissible regimes; the worst ratio must
// already be stable between trace depths 10 and 14.
Outcome check_trace_lp() {
  Outcome out;
  const double stab_tol = 0.05;  // relative drift of the max ratio
  const Box region(Point{-2.0}, Point{2.0});

  auto fields = suite_fields(1);
  int flagged = 0;
  std::vector<BoundaryGridFunction> shallow, deep;
  shallow.reserve(fields.size());
  deep.reserve(fields.size());
  for (const auto& [name, f] : fields) {
    shallow.push_back(trace_level(f, 10, region, &flagged));
    deep.push_back(trace_level(f, 14, region, &flagged));
  }

  const struct {
    double p, lambda;
  } regimes[] = {{1, 1}, {2, 3}};
  std::string summary;
  for (const auto& reg : regimes) {
    const WeightParams wp{reg.p, reg.p - 1, reg.lambda, 1};
    double max10 = 0, max14 = 0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const double den = weighted_sobolev_norm(fields[i].second, wp).total;
      const double r10 = boundary_lp_norm(shallow[i], reg.p) / den;
      const double r14 = boundary_lp_norm(deep[i], reg.p) / den;
      out.require(den > 0 && std::isfinite(r10) && std::isfinite(r14),
                  fields[i].first + " ratio degenerate (p=" + fmt(reg.p) + ")");
      max10 = std::max(max10, r10);
      max14 = std::max(max14, r14);
    }
    out.require(std::abs(max14 - max10) < stab_tol * max10,
                "p=" + fmt(reg.p) + " max ratio drifted " +
                    fmt(std::abs(max14 - max10) / max10));
    if (!summary.empty()) summary += ", ";
    summary += "p=" + fmt(reg.p) + " ratio " + fmt(max14);
  }
  if (flagged) summary += ", flagged " + std::to_string(flagged);
  out.info(summary);
  return out;
}

// --- 4 -----------------------------------------------------------------
// The same traces measured in the layer norm at the trace regularity gamma:
// ratios stay finite and the finest selected layer moves the total by less
// than 5%, so the truncation at j_max = 4 has converged.
Outcome check_trace_layer() {
  Outcome out;
  const double layer_share_tol = 0.05;
  const Box region(Point{-2.0}, Point{2.0});

  auto fields = suite_fields(1);
  int flagged = 0;
  std::vector<BoundaryGridFunction> traces;
  traces.reserve(fields.size());
  for (const auto& [name, f] : fields)
    traces.push_back(trace_level(f, 16, region, &flagged));

  const struct {
    double p, lambda, gamma;  // gamma: lambda/2 at p=1, (lambda-(p-1))/2 else
  } regimes[] = {{1, 1, 0.5}, {2, 3, 1.0}};
  std::string summary;
  for (const auto& reg : regimes) {
    const WeightParams wp{reg.p, reg.p - 1, reg.lambda, 1};
    double max_ratio = 0, worst_share = 0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const double den = weighted_sobolev_norm(fields[i].second, wp).total;
      const auto three = besov_norm(traces[i], BesovParams{reg.p, reg.gamma, 3});
      const auto four = besov_norm(traces[i], BesovParams{reg.p, reg.gamma, 4});
      out.require(den > 0 && std::isfinite(three.total / den) &&
                      std::isfinite(four.total / den),
                  fields[i].first + " layer ratio degenerate (p=" +
                      fmt(reg.p) + ")");
      const double share = (four.total - three.total) / four.total;
      out.require(share < layer_share_tol,
                  fields[i].first + " finest layer share " + fmt(share) +
                      " (p=" + fmt(reg.p) + ")");
      max_ratio = std::max(max_ratio, four.total / den);
      worst_share = std::max(worst_share, share);
    }
    if (!summary.empty()) summary += ", ";
    summary += "p=" + fmt(reg.p) + " ratio " + fmt(max_ratio) + " share " +
               fmt(worst_share);
  }
  if (flagged) summary += ", flagged " + std::to_string(flagged);
  out.info(summary);
  return out;
}

// --- 5 -----------------------------------------------------------------
// One constant bounds ||E g||_{W^{1,1}(mu)} by ||g||_{B^1_1} across ten
// random level-3 grids, and refining the same data one level (children
// inherit the parent value) cannot inflate the fitted constant by >10%.
Outcome check_extension_bound() {
  Outcome out;
  const double drift_cap = 1.10;
  const WeightParams wp{1, 0, 1, 1};
  const PartitionSpec spec{};
  Rng rng(1);

  auto refine = [](const BoundaryGridFunction& g) {
    BoundaryGridFunction h;
    h.level = g.level + 1;
    h.dim = g.dim;
    h.support = g.support;
    for (const auto& [q, v] : g.values)
      for (std::int64_t b = 0; b < 2; ++b)
        h.values[CubeIndex(q.level + 1, 2 * q.m[0] + b)] = v;
    return h;
  };

  double c_level3 = 0, c_level4 = 0;
  for (int trial = 0; trial < 10; ++trial) {
    auto g = random_grid(3, 1, rng);
    auto ext = extension_field(g, spec);
    const double num = weighted_sobolev_norm(ext, wp, 0x1p-12).total;
    const double den3 = besov_norm(g, BesovParams{1, 1, 1}).total;
    const double den4 = besov_norm(refine(g), BesovParams{1, 1, 2}).total;
    out.require(std::isfinite(num) && den3 > 0 && den4 > 0,
                "degenerate trial " + std::to_string(trial));
    c_level3 = std::max(c_level3, num / den3);
    c_level4 = std::max(c_level4, num / den4);
  }
  out.require(std::isfinite(c_level3) && c_level3 > 0,
              "no usable constant at level 3");
  out.require(c_level4 <= drift_cap * c_level3,
              "refinement moved the constant from " + fmt(c_level3) + " to " +
                  fmt(c_level4));
  out.info("C = " + fmt(c_level3) + ", refined grids " + fmt(c_level4));
  return out;
}

// --- 6 -----------------------------------------------------------------
// Tracing the extension at depth k >= L + 3 reproduces level-L data at
// every cube center: the averaging window around each center then sits
// entirely inside one data cell, where the extension is constant.
Outcome check_retraction() {
  Outcome out;
  const double tol = 1e-6;
  const PartitionSpec spec{};
  Rng rng(7);

  double worst = 0;
  int flagged = 0;
  for (int L : {1, 2, 3}) {
    auto g = random_grid(L, 1, rng);
    auto ext = extension_field(g, spec);
    for (int k = L + 3; k <= L + 6; ++k) {
      auto tr = trace_level(ext, k, Box(Point{0.0}, Point{1.0}), &flagged);
      for (const auto& [q, v] : g.values)
        worst = std::max(worst, std::abs(tr.value_at(cube_center(q)) - v));
    }
  }
  out.require(worst <= tol, "worst center mismatch " + fmt(worst));
  std::string extra =
      flagged ? ", flagged " + std::to_string(flagged) : std::string();
  out.info("worst mismatch " + fmt(worst) + extra);
  return out;
}

// --- 7 -----------------------------------------------------------------
// The normalized bumps sum to one across the strip, and two bumps share
// support exactly when their cubes are comparable.
Outcome check_partition() {
  Outcome out;
  const double unity_tol = 1e-12;
  const PartitionSpec spec{};
  Rng rng(2026);

  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const Point y{rng.uniform(-2.0, 2.0), 1.0 - rng.uniform01()};
    NeumaierSum sum;
    for (const auto& q : active_partition_cubes(y, spec))
      sum.add(partition_value(q, y, spec));
    worst = std::max(worst, std::abs(sum.value() - 1.0));
  }
  out.require(worst < unity_tol, "partition defect " + fmt(worst));

  std::vector<CubeIndex> census;
  for (int level = 1; level <= 6; ++level)
    for (const auto& q : level_cubes(level, Box(Point{0.0}, Point{1.0})))
      census.push_back(q);
  auto support_of = [&](const CubeIndex& q) {
    return whitney_box(q).inflated(spec.collar * edge_length(q));
  };
  long violations = 0;
  for (std::size_t a = 0; a < census.size(); ++a) {
    const Box sa = support_of(census[a]);
    const auto na = neighbors(census[a]);
    for (std::size_t b = a + 1; b < census.size(); ++b) {
      const bool overlap = sa.overlaps(support_of(census[b]));
      const bool comparable =
          std::find(na.begin(), na.end(), census[b]) != na.end();
      violations += overlap != comparable;
    }
  }
  out.require(violations == 0,
              std::to_string(violations) + " support/comparability mismatches");
  out.info("defect " + fmt(worst) + " over 10000 points, " +
           std::to_string(census.size()) + " cubes paired");
  return out;
}

// --- 8 -----------------------------------------------------------------
// Three independent cross-checks: the sparse layer seminorm against a
// brute-force enumeration, the mu quadrature against the lambda = 0 closed
// form, and the extension gradient against central differences.
Outcome check_oracles() {
  Outcome out;

  double worst_besov = 0;
  {
    const double tol = 1e-12;
    Rng rng(5);
    const double ps[] = {1, 2, 1.5};
    const double ls[] = {1, 2, 0.7};
    for (int i = 0; i < 50; ++i) {
      const int level = 2 + i % 4;
      const BesovParams bp{ps[i % 3], ls[(i / 3) % 3], level >= 4 ? 2 : 1};
      auto g = random_grid(level, 1, rng);
      const double sparse = besov_seminorm(g, bp).total;
      const double brute = oracles::brute_besov_seminorm(g, bp);
      worst_besov = std::max(worst_besov, std::abs(sparse - brute) / brute);
    }
    for (int i = 0; i < 10; ++i) {
      const BesovParams bp{i % 2 ? 2.0 : 1.0, 1.5, 1};
      auto g = random_grid(2 + i % 2, 2, rng);
      const double sparse = besov_seminorm(g, bp).total;
      const double brute = oracles::brute_besov_seminorm(g, bp);
      worst_besov = std::max(worst_besov, std::abs(sparse - brute) / brute);
    }
    out.require(worst_besov <= tol,
                "layer seminorm vs brute force: " + fmt(worst_besov));
  }

  double worst_mu = 0;
  {
    const double tol = 1e-10;
    Rng rng(6);
    const double alphas[] = {-0.5, 0.25, 1.0};
    for (int i = 0; i < 20; ++i) {
      const double alpha = alphas[i % 3];
      const double t_lo = 0.1 + 0.6 * rng.uniform01();
      const double t_hi = t_lo + (1.0 - t_lo) * (0.2 + 0.8 * rng.uniform01());
      const double x0 = rng.uniform(-1.0, 1.0);
      const double width = 0.1 + rng.uniform01();
      const Box box =
          Box::cross(Box(Point{x0}, Point{x0 + width}), t_lo, t_hi);
      auto quad = tensor_integrate(
          [](const Point&, double* o) { o[0] = 1.0; }, 1, box,
          [alpha](double t) { return std::pow(t, alpha); }, 6, 2, 1e-13, 6);
      const double closed = mu_measure(box, WeightParams{2, alpha, 0, 1});
      const double byhand = width *
                            (std::pow(t_hi, alpha + 1) -
                             std::pow(t_lo, alpha + 1)) /
                            (alpha + 1);
      worst_mu = std::max({worst_mu, std::abs(quad.value[0] - closed) / closed,
                           std::abs(byhand - closed) / closed});
    }
    out.require(worst_mu <= tol, "mu measure vs quadrature: " + fmt(worst_mu));
  }

  double worst_grad = 0;
  {
    const double tol = 1e-4;  // relative, with a +1 absolute floor
    const PartitionSpec spec{};
    Rng rng(11);
    auto g = random_grid(3, 1, rng);
    for (int i = 0; i < 1000; ++i) {
      const Point y{rng.uniform(-0.2, 1.2), 0.05 + rng.uniform01()};
      const Point grad = extend_grad(g, y, spec);
      const Point fd = oracles::fd_gradient(
          [&](const Point& z) { return extend_eval(g, z, spec); }, y, 1e-7);
      const double err = std::hypot(grad[0] - fd[0], grad[1] - fd[1]);
      worst_grad = std::max(
          worst_grad, err / (1.0 + std::hypot(grad[0], grad[1])));
    }
    out.require(worst_grad <= tol,
                "extension gradient vs differences: " + fmt(worst_grad));
  }

  out.info("besov " + fmt(worst_besov) + ", measure " + fmt(worst_mu) +
           ", gradient " + fmt(worst_grad));
  return out;
}

// --- 9 -----------------------------------------------------------------
// A single constant (well under 10) covers the Poincare inequality for all
// suite fields plus the counterexample over 100 random Whitney boxes.
Outcome check_poincare() {
  Outcome out;
  const double c_cap = 10.0;
  // Both sides vanish where a field misses the box entirely; treat tiny
  // oscillation over tiny gradient mass as a skip rather than a ratio.
  const double rhs_floor = 1e-13, lhs_floor = 1e-12;

  auto fields = suite_fields(1);
  fields.emplace_back("counterexample",
                      counterexample_field(CounterexampleParams{1, -1, 0, 1}));

  Rng rng(17);
  std::vector<Box> boxes;
  boxes.reserve(100);
  for (int i = 0; i < 100; ++i) {
    const int k = 1 + int(rng.uniform_int(6));
    const std::int64_t span = std::int64_t(4) << k;  // cells across (-2, 2]
    const std::int64_t m = rng.uniform_int(span) - (std::int64_t(2) << k);
    boxes.push_back(whitney_box(CubeIndex(k, m)));
  }

  double worst = 0;
  int used = 0;
  std::string culprit;
  for (const auto& [name, f] : fields)
    for (const auto& box : boxes) {
      const auto [lhs, rhs] = poincare_check(f, box);
      if (rhs <= rhs_floor && lhs <= lhs_floor) continue;
      ++used;
      if (lhs / rhs > worst) {
        worst = lhs / rhs;
        culprit = name;
      }
    }
  out.require(worst <= c_cap, "poincare ratio " + fmt(worst) + " on " + culprit);
  out.info("max ratio " + fmt(worst) + " (" + culprit + ", " +
           std::to_string(used) + " pairs)");
  return out;
}

struct Entry {
  const char* name;
  Outcome (*fn)();
};

}  // namespace

int main() {
  const Entry checks[] = {
      {"muckenhoupt dichotomy at the borderline", check_ap_dichotomy},
      {"counterexample: finite norm, diverging trace", check_counterexample},
      {"trace bounded into L^p", check_trace_lp},
      {"trace bounded into the layer norm", check_trace_layer},
      {"extension bounded by the layer norm", check_extension_bound},
      {"trace inverts the extension", check_retraction},
      {"partition of unity and supports", check_partition},
      {"independent oracles agree", check_oracles},
      {"one poincare constant fits all", check_poincare},
  };

  int failed = 0;
  for (std::size_t i = 0; i < std::size(checks); ++i) {
    const auto start = Clock::now();
    Outcome out;
    try {
      out = checks[i].fn();
    } catch (const std::exception& e) {
      out.ok = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = seconds_since(start);
    std::printf("[%s] %zu. %-45s %7.1fs  %s\n", out.ok ? "PASS" : "FAIL",
                i + 1, checks[i].name, secs, out.detail.c_str());
    std::fflush(stdout);
    failed += !out.ok;
  }
  if (failed)
    std::printf("%d of %zu checks failed\n", failed, std::size(checks));
  else
    std::printf("all %zu checks passed\n", std::size(checks));
  return failed ? 1 : 0;
}
