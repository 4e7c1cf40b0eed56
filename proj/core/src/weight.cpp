#include "tracelab/weight.hpp"

#include <cmath>
#include <limits>

#include "tracelab/errors.hpp"
#include "tracelab/numerics.hpp"

namespace tracelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log4() { return std::log(4.0); }

double omega_raw(double t, double alpha, double lambda) {
  if (t > 1.0) return std::pow(log4(), lambda);
  return std::pow(t, alpha) * std::pow(std::log(4.0 / t), lambda);
}

// int_a^b t^alpha log^n(4/t) dt for integer n >= 0 via the antiderivative
// recurrence F_n(c) = c^{alpha+1}/(alpha+1) L^n + n/(alpha+1) F_{n-1}(c),
// L = log(4/c); F_n(0) = 0 since alpha > -1.
double closed_form_01(double a, double b, double alpha, int n) {
  auto F = [&](double c) {
    if (c == 0.0) return 0.0;
    const double lead = std::pow(c, alpha + 1.0) / (alpha + 1.0);
    const double L = std::log(4.0 / c);
    double val = lead;  // F_0
    for (int i = 1; i <= n; ++i)
      val = lead * std::pow(L, double(i)) + double(i) / (alpha + 1.0) * val;
    return val;
  };
  return F(b) - F(a);
}

// int_a^b t^alpha log^lambda(4/t) dt with 0 <= a < b <= 1, alpha > -1,
// arbitrary real lambda.  Substituting u = log(4/t) turns it into
// 4^{alpha+1} int e^{-(alpha+1)u} u^lambda du over [log(4/b), log(4/a)),
// integrated chunk by chunk until the exponential tail is negligible.
double raw_integral_01(double a, double b, double alpha, double lambda) {
  if (!(b > a)) return 0.0;
  if (lambda >= 0.0 && lambda == std::floor(lambda) && lambda <= 40.0)
    return closed_form_01(a, b, alpha, int(lambda));

  const double c = alpha + 1.0;
  const double u_lo = std::log(4.0 / b);
  const double u_hi = a == 0.0 ? kInf : std::log(4.0 / a);
  const double scale = std::pow(4.0, c);
  auto g = [&](double u) { return std::exp(-c * u) * std::pow(u, lambda); };

  NeumaierSum total;
  double u = u_lo;
  const double chunk = std::max(4.0, 4.0 / c);
  for (int i = 0; i < 400 && u < u_hi; ++i) {
    const double next = std::min(u + chunk, u_hi);
    auto r = adaptive_integrate(g, u, next, 1e-15, 1e-12);
    total.add(r.value);
    u = next;
    if (u_hi == kInf && std::abs(r.value) < 1e-16 * (1.0 + std::abs(total.value())))
      break;
  }
  return scale * total.value();
}

// int_a^b t^{-1} log^{-s}(4/t) dt in closed form (the borderline dual
// integrand); a = 0 allowed when s > 1.
double raw_integral_borderline_dual(double a, double b, double s) {
  const double Lb = std::log(4.0 / b);
  if (a == 0.0) {
    if (s <= 1.0) return kInf;
    return std::pow(Lb, 1.0 - s) / (s - 1.0);
  }
  const double La = std::log(4.0 / a);
  if (s == 1.0) return std::log(La / Lb);
  return (std::pow(La, 1.0 - s) - std::pow(Lb, 1.0 - s)) / (1.0 - s);
}

// Raw (unnormalized) int of omega over (a, b), both branches.
double raw_omega_integral(double a, double b, const WeightParams& wp) {
  double total = 0.0;
  if (a < 1.0)
    total += raw_integral_01(a, std::min(b, 1.0), wp.alpha, wp.lambda);
  if (b > 1.0) total += (b - std::max(a, 1.0)) * std::pow(log4(), wp.lambda);
  return total;
}

void check_interval(double a, double b) {
  if (a < 0.0 || !(b > a))
    throw DomainError("weight integral needs 0 <= a < b, got [" +
                      std::to_string(a) + ", " + std::to_string(b) + "]");
}

}  // namespace

void WeightParams::validate() const {
  if (!(p >= 1.0))
    throw InvalidParams("WeightParams: p must be >= 1, got " + std::to_string(p));
  if (!(alpha > -1.0))
    throw InvalidParams("WeightParams: alpha must be > -1, got " +
                        std::to_string(alpha));
  if (!(alpha <= p - 1.0))
    throw InvalidParams("WeightParams: alpha must be <= p-1, got alpha=" +
                        std::to_string(alpha) + ", p=" + std::to_string(p));
  if (dim < 1 || dim > 3)
    throw InvalidParams("WeightParams: dim must be 1, 2, or 3");
}

double log_normalizer(double lambda) { return std::pow(log4(), lambda); }

double omega(double t, const WeightParams& wp) {
  if (!(t > 0.0))
    throw DomainError("omega: t must be positive, got " + std::to_string(t));
  return omega_raw(t, wp.alpha, wp.lambda);
}

double vertical_integral(double a, double b, const WeightParams& wp) {
  check_interval(a, b);
  return raw_omega_integral(a, b, wp) / log_normalizer(wp.lambda);
}

double mu_measure(const Box& region, const WeightParams& wp) {
  if (region.size() < 2 || !region.valid())
    throw DomainError("mu_measure: malformed region");
  if (region.t_lo() < 0.0)
    throw DomainError("mu_measure: region dips below t = 0");
  double horiz = 1.0;
  for (int i = 0; i + 1 < region.size(); ++i) horiz *= region.extent(i);
  return horiz * vertical_integral(region.t_lo(), region.t_hi(), wp);
}

double omega_essinf(const WeightParams& wp, double t_lo, double t_hi) {
  check_interval(t_lo, t_hi);
  const double al = wp.alpha, la = wp.lambda;
  double inf = kInf;
  if (t_lo < 1.0) {
    const double b = std::min(t_hi, 1.0);
    inf = std::min(inf, omega_raw(b, al, la));
    if (t_lo == 0.0) {
      // Limit of omega at 0+ by leading behavior.
      if (al > 0.0 || (al == 0.0 && la < 0.0)) inf = 0.0;
      if (al == 0.0 && la == 0.0) inf = std::min(inf, 1.0);
      // al < 0, or al = 0 with la > 0: omega blows up at 0, no constraint.
    } else {
      inf = std::min(inf, omega_raw(t_lo, al, la));
    }
    // The only interior critical point of t^al log^la(4/t) on (0,1).
    if (al != 0.0) {
      const double t_star = 4.0 * std::exp(-la / al);
      if (t_lo < t_star && t_star < b)
        inf = std::min(inf, omega_raw(t_star, al, la));
    }
  }
  if (t_hi > 1.0) inf = std::min(inf, std::pow(log4(), la));
  return inf;
}

double dual_average(const WeightParams& wp, double t_lo, double t_hi) {
  check_interval(t_lo, t_hi);
  if (!(wp.p > 1.0)) throw InvalidParams("dual_average: requires p > 1");
  const double q = 1.0 / (wp.p - 1.0);
  double total = 0.0;
  if (t_lo < 1.0) {
    const double b = std::min(t_hi, 1.0);
    if (wp.borderline()) {
      // omega^{-q} = t^{-1} log^{-s}(4/t) with s = lambda/(p-1); divergence
      // at t = 0 is decided analytically, never by quadrature.
      const double s = wp.lambda * q;
      const double part = raw_integral_borderline_dual(t_lo, b, s);
      if (part == kInf) return kInf;
      total += part;
    } else {
      total += raw_integral_01(t_lo, b, -wp.alpha * q, -wp.lambda * q);
    }
  }
  if (t_hi > 1.0)
    total += (t_hi - std::max(t_lo, 1.0)) * std::pow(log4(), -wp.lambda * q);
  return total / (t_hi - t_lo);
}

double ap_ratio(const Box& region, const WeightParams& wp) {
  if (region.size() < 2 || !region.valid() || region.t_lo() < 0.0)
    throw DomainError("ap_ratio: region must be a valid box in the upper half-space");
  const double a = region.t_lo(), b = region.t_hi();
  const double left = raw_omega_integral(a, b, wp) / (b - a);
  double ratio;
  if (wp.p > 1.0) {
    const double right = dual_average(wp, a, b);
    ratio = right == kInf ? kInf : left * std::pow(right, wp.p - 1.0);
  } else {
    const double inf = omega_essinf(wp, a, b);
    ratio = inf == 0.0 ? kInf : left / inf;
  }
  if (ratio < 1.0 - 1e-9)
    throw Error("ap_ratio: computed ratio " + std::to_string(ratio) +
                " below the Jensen floor of 1");
  return ratio;
}

std::string to_string(ApVerdict v) {
  switch (v) {
    case ApVerdict::ap_bounded: return "A_p-bounded";
    case ApVerdict::blows_up: return "blows up like (k+2)^(p-1)";
    case ApVerdict::dual_diverges: return "dual diverges";
    case ApVerdict::a1: return "A_1";
    case ApVerdict::a1_fails: return "A_1 fails";
  }
  return "?";
}

ApScanResult ap_scan(const WeightParams& wp, int k_max) {
  wp.validate();
  if (k_max < 1) throw InvalidParams("ap_scan: k_max must be >= 1");
  ApScanResult res;
  res.rows.reserve(k_max + 1);
  for (int k = 0; k <= k_max; ++k) {
    const double h = pow2(-k);
    ApScanRow row;
    row.k = k;
    row.left_factor = raw_omega_integral(0.0, h, wp) / h;
    if (wp.p > 1.0) {
      row.right_factor = dual_average(wp, 0.0, h);
      row.ratio = row.right_factor == kInf
                      ? kInf
                      : row.left_factor * std::pow(row.right_factor, wp.p - 1.0);
    } else {
      const double inf = omega_essinf(wp, 0.0, h);
      row.right_factor = inf == 0.0 ? kInf : 1.0 / inf;
      row.ratio = row.right_factor == kInf ? kInf
                                           : row.left_factor * row.right_factor;
    }
    res.rows.push_back(row);
  }

  std::vector<double> xs, ys;
  for (const auto& row : res.rows) {
    if (row.k < (k_max + 1) / 2) continue;
    if (!std::isfinite(row.ratio)) continue;
    xs.push_back(std::log(double(row.k + 2)));
    ys.push_back(std::log(row.ratio));
  }
  res.fitted_exponent = xs.size() >= 2
                            ? fit_line(xs, ys).slope
                            : std::numeric_limits<double>::quiet_NaN();

  if (wp.alpha < wp.p - 1.0)
    res.verdict = ApVerdict::ap_bounded;
  else if (wp.p > 1.0)
    res.verdict = wp.lambda > wp.p - 1.0 ? ApVerdict::blows_up
                                         : ApVerdict::dual_diverges;
  else
    res.verdict = wp.lambda >= 0.0 ? ApVerdict::a1 : ApVerdict::a1_fails;
  return res;
}

}  // namespace tracelab
