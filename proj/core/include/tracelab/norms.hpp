#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tracelab/field.hpp"
#include "tracelab/weight.hpp"

namespace tracelab {

// Parameters of the discrete layer norm.  lambda_or_gamma is the exponent in
// the layer weight (2^j + 2)^lambda; the same slot carries the target
// exponent gamma when the norm acts as an embedding target.
struct BesovParams {
  double p = 1;
  double lambda_or_gamma = 1;
  int j_max = kLayerCap;

  void validate() const;
};

// A norm value together with its per-layer (or per-slab) composition.
//
// Conventions, used consistently by every producer below:
//   * besov_seminorm: total == sum of per_layer entries (the raw
//     p-homogeneous sum), and l_p_part is absent.
//   * besov_norm / weighted_sobolev_norm: per_layer entries are p-th power
//     masses of the seminorm (resp. gradient) part, l_p_part is the plain
//     L^p addend, and total = l_p_part + (sum per_layer)^{1/p}.
// truncation_tail_estimate reports how much the quoted total would move if
// the truncation were pushed one step further (one more layer, or eps/2).
struct NormBreakdown {
  double total = 0;
  std::optional<double> l_p_part;
  std::vector<std::pair<int, double>> per_layer;
  double truncation_tail_estimate = 0;
};

// JSON rendering {total, l_p_part?, per_layer: [[j, value]...], tail_estimate}.
std::string norm_breakdown_json(const NormBreakdown& nb);

// The p-th power masses int |f|^p dmu and int |grad f|^p dmu accumulated per
// dyadic slab t in (2^-k, 2^-k+1], clipped to (t_lo, t_hi].  Slabs are the
// quadrature unit for everything Sobolev: within one slab the weight varies
// by a bounded factor, so per-box Gauss rules see no singularity.  Exposing
// the masses lets callers recombine one deep sweep into the whole family of
// eps-truncated norms (and their tails) by prefix sums.
struct SobolevSlabs {
  double p = 1;
  std::vector<int> levels;        // slab level k, coarse to fine
  std::vector<double> value_mass; // int |f|^p dmu over slab k
  std::vector<double> grad_mass;  // int |grad f|^p dmu over slab k
};

// resolution = Gauss-Legendre points per axis per quadrature cell; cells per
// box come from the field's init_cells hint (default one cell).
SobolevSlabs sobolev_slab_masses(const ScalarField& f, const WeightParams& wp,
                                 double t_lo, double t_hi, int resolution);

// || f ||_{L^p(mu)} + || grad f ||_{L^p(mu)} over support cap R^d x (eps, T],
// via sobolev_slab_masses.  per_layer holds the gradient masses by slab level.
NormBreakdown weighted_sobolev_norm(const ScalarField& f,
                                    const WeightParams& wp,
                                    double eps = 0x1p-16, double T = 4,
                                    int resolution = 4);

// sum_j (2^j+2)^lambda sum_{Q in layer j} m_d(Q) sum_{Q' ~ Q} |g_Q - g_Q'|^p
// with g_Q the exact grid average.  Enumeration covers the support plus one
// coarse-neighbor margin; everything further out differs zero from zero.
NormBreakdown besov_seminorm(const BoundaryGridFunction& g,
                             const BesovParams& bp);

// Exact L^p norm of the step function g plus the layer seminorm.
NormBreakdown besov_norm(const BoundaryGridFunction& g, const BesovParams& bp);

// (sum_Q m_d(Q) |g_Q|^p)^{1/p}, exact over the stored cells.
double boundary_lp_norm(const BoundaryGridFunction& g, double p);

// Both sides of the (1,1)-Poincare inequality on the box Q with the constant
// factored out: returns (avg_Q |f - f_Q|, l(Q) * avg_Q |grad f|), Lebesgue
// averages at a fixed composite Gauss resolution.  Callers assert
// lhs <= C * rhs with one global C.
std::pair<double, double> poincare_check(const ScalarField& f, const Box& Q);

}  // namespace tracelab
