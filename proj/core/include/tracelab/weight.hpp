#pragma once

#include <string>
#include <vector>

#include "tracelab/geometry.hpp"

namespace tracelab {

// The weight family: omega(t) = t^alpha log^lambda(4/t) on (0,1], constant
// log^lambda(4) above.  alpha = p-1 is the borderline this library studies.
struct WeightParams {
  double p = 2.0;
  double alpha = 1.0;
  double lambda = 3.0;
  int dim = 1;  // ambient boundary dimension d

  void validate() const;  // InvalidParams unless p >= 1, -1 < alpha <= p-1
  bool in_gamma() const {
    return (p > 1.0 && lambda > p - 1.0) || (p == 1.0 && lambda >= 0.0);
  }
  bool borderline() const { return alpha == p - 1.0; }
};

double log_normalizer(double lambda);  // log^lambda 4

// Raw weight value; DomainError for t <= 0.
double omega(double t, const WeightParams& wp);

// (1/log^lambda 4) * int_a^b omega dt.  The normalization makes the measure
// coincide with Lebesgue on t > 1.  Closed form (integration by parts
// recurrence) when lambda is a small nonnegative integer, otherwise adaptive
// quadrature in u = log(4/t), where the integrand decays exponentially.
double vertical_integral(double a, double b, const WeightParams& wp);

// Product measure of a body box: horizontal Lebesgue volume times the
// vertical integral; exact separability since omega depends only on t.
double mu_measure(const Box& region, const WeightParams& wp);

// Essential infimum of the raw weight over the t-interval (t_lo, t_hi],
// determined analytically from the monotonicity pattern of omega.
double omega_essinf(const WeightParams& wp, double t_lo, double t_hi);

// Lebesgue average of omega^{-1/(p-1)} over (t_lo, t_hi]; +infinity when the
// integral diverges (borderline alpha with the interval reaching t = 0 and
// lambda/(p-1) <= 1).  Requires p > 1.
double dual_average(const WeightParams& wp, double t_lo, double t_hi);

// Muckenhoupt ratio over a box: (avg omega)(avg omega^{-1/(p-1)})^{p-1} for
// p > 1, (avg omega)/(ess inf omega) for p = 1.  Only the t-extent matters.
double ap_ratio(const Box& region, const WeightParams& wp);

struct ApScanRow {
  int k = 0;
  double left_factor = 0;   // Lebesgue average of omega over (0, 2^-k]
  double right_factor = 0;  // dual average (p>1) or 1/essinf (p=1); may be +inf
  double ratio = 0;         // left * right^{p-1}, resp. left * right for p=1
};

enum class ApVerdict { ap_bounded, blows_up, dual_diverges, a1, a1_fails };
std::string to_string(ApVerdict v);

struct ApScanResult {
  std::vector<ApScanRow> rows;  // k = 0..k_max over regions (0, 2^-k]^{d+1}
  // Least-squares slope of log(ratio) against log(k+2) over the upper half
  // of the scanned range (the asymptotic window); NaN if fewer than two
  // finite ratios land there.
  double fitted_exponent = 0;
  ApVerdict verdict = ApVerdict::ap_bounded;
};

ApScanResult ap_scan(const WeightParams& wp, int k_max);

}  // namespace tracelab
