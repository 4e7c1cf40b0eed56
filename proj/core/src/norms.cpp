#include "tracelab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"
#include "tracelab/dyadic.hpp"
#include "tracelab/errors.hpp"
#include "tracelab/numerics.hpp"
#include "tracelab/parallel.hpp"
#include "tracelab/quadrature.hpp"

namespace tracelab {

void BesovParams::validate() const {
  if (!(p >= 1)) throw InvalidParams("besov: p must be >= 1");
  if (!(lambda_or_gamma > 0))
    throw InvalidParams("besov: layer exponent must be > 0");
  if (j_max < 0 || j_max > kLayerCap)
    throw InvalidParams("besov: j_max must lie in [0, " +
                        std::to_string(kLayerCap) + "]");
}

std::string norm_breakdown_json(const NormBreakdown& nb) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return v != v ? "nan" : (v > 0 ? "inf" : "-inf");
  };
  nlohmann::ordered_json j;
  j["total"] = num(nb.total);
  if (nb.l_p_part) j["l_p_part"] = num(*nb.l_p_part);
  auto& layers = j["per_layer"] = nlohmann::ordered_json::array();
  for (const auto& [jj, v] : nb.per_layer)
    layers.push_back(nlohmann::ordered_json::array({jj, num(v)}));
  j["tail_estimate"] = num(nb.truncation_tail_estimate);
  return j.dump();
}

namespace {

double euclid(const Point& g) {
  double s = 0;
  for (int i = 0; i < g.size(); ++i) s += g[i] * g[i];
  return std::sqrt(s);
}

}  // namespace

SobolevSlabs sobolev_slab_masses(const ScalarField& f, const WeightParams& wp,
                                 double t_lo, double t_hi, int resolution) {
  wp.validate();
  if (!f.grad) throw MissingGradient("sobolev norm: field lacks a gradient");
  if (!(t_lo > 0) || !(t_hi > t_lo))
    throw DomainError("sobolev norm: need 0 < t_lo < t_hi");
  if (!f.support.valid())
    throw DomainError("sobolev norm: field must declare bounded support");
  if (resolution < 1)
    throw InvalidParams("sobolev norm: resolution must be >= 1");

  SobolevSlabs out;
  out.p = wp.p;
  const double a = std::max(t_lo, f.support.t_lo());
  const double b = std::min(t_hi, f.support.t_hi());
  if (!(b > a)) return out;
  const Box hull = f.support.horizontal();
  const int dim = hull.size();
  const double p = wp.p;

  // Slab k holds t in (2^-k, 2^-k+1]; walk from the coarsest one meeting
  // (a, b] down to the finest, clipping both ends.
  const int k_first = int(std::floor(-std::log2(b))) + 1;
  for (int k = k_first;; ++k) {
    const double slab_lo = std::max(a, pow2(-k));
    const double slab_hi = std::min(b, pow2(1 - k));
    if (!(slab_hi > slab_lo)) {
      if (pow2(-k) < a) break;  // past the bottom of the range
      continue;
    }
    // Lateral tiling.  A field carrying a constant_probe has structure on
    // the level-k cube lattice of its slab, so its boxes must follow that
    // lattice all the way down.  Without one the field is laterally smooth
    // at a fixed scale and deep slabs keep a bounded horizontal tiling,
    // turning the sweep cost per slab from O(2^k) into O(1).
    constexpr int kSmoothLateralCap = 8;
    const int kt = f.constant_probe ? k : std::min(k, kSmoothLateralCap);
    const auto ranges = level_cube_ranges(kt, hull);
    if (ranges.empty()) continue;

    std::array<std::int64_t, 3> lo{};
    std::array<std::size_t, 3> cnt{};
    std::size_t n = 1;
    for (int i = 0; i < dim; ++i) {
      lo[i] = ranges[i].first;
      cnt[i] = std::size_t(ranges[i].second - ranges[i].first + 1);
      n *= cnt[i];
    }

    const double l = pow2(-kt);
    const double slab_mu = vertical_integral(slab_lo, slab_hi, wp);
    const double norm_c = log_normalizer(wp.lambda);
    auto t_weight = [&wp, norm_c](double t) { return omega(t, wp) / norm_c; };
    auto integrand = [&f, p](const Point& x, double* comp) {
      comp[0] = std::pow(std::abs(f.eval(x)), p);
      comp[1] = std::pow(euclid(f.grad(x)), p);
    };

    // Fixed-size blocks summed with compensation, then merged in block
    // order: totals do not depend on the worker count.
    constexpr std::size_t kBlock = 1024;
    const std::size_t blocks = (n + kBlock - 1) / kBlock;
    std::vector<double> vmass(blocks), gmass(blocks);
    parallel_for(
        blocks,
        [&](std::size_t bi) {
          NeumaierSum vs, gs;
          const std::size_t end = std::min(n, (bi + 1) * kBlock);
          for (std::size_t idx = bi * kBlock; idx < end; ++idx) {
            std::size_t rem = idx;
            Point blo = Point::zeros(dim), bhi = Point::zeros(dim);
            for (int i = 0; i < dim; ++i) {
              const std::int64_t m = lo[i] + std::int64_t(rem % cnt[i]);
              rem /= cnt[i];
              blo[i] = l * double(m);
              bhi[i] = l * double(m + 1);
            }
            const Box cell = Box::cross(Box(blo, bhi), slab_lo, slab_hi);
            if (f.constant_probe) {
              if (auto c = f.constant_probe(cell)) {
                if (*c != 0.0)
                  vs.add(cell.horizontal().volume() * slab_mu *
                         std::pow(std::abs(*c), p));
                continue;  // constant on the cell: gradient mass is zero
              }
            }
            const int cells =
                f.init_cells ? std::max(1, f.init_cells(cell)) : 1;
            TensorResult r = tensor_integrate(integrand, 2, cell, t_weight,
                                              resolution, cells, 1e-8, 0);
            vs.add(r.value[0]);
            gs.add(r.value[1]);
          }
          vmass[bi] = vs.value();
          gmass[bi] = gs.value();
        },
        1);

    NeumaierSum vtot, gtot;
    for (std::size_t bi = 0; bi < blocks; ++bi) {
      vtot.add(vmass[bi]);
      gtot.add(gmass[bi]);
    }
    out.levels.push_back(k);
    out.value_mass.push_back(vtot.value());
    out.grad_mass.push_back(gtot.value());
    if (pow2(-k) <= a) break;
  }
  return out;
}

NormBreakdown weighted_sobolev_norm(const ScalarField& f,
                                    const WeightParams& wp, double eps,
                                    double T, int resolution) {
  if (!(eps > 0) || !(T > eps))
    throw DomainError("sobolev norm: need 0 < eps < T");
  const SobolevSlabs main = sobolev_slab_masses(f, wp, eps, T, resolution);
  const SobolevSlabs finer =
      sobolev_slab_masses(f, wp, eps / 2, eps, resolution);

  const double p = wp.p;
  NeumaierSum vsum, gsum;
  NormBreakdown nb;
  for (std::size_t i = 0; i < main.levels.size(); ++i) {
    vsum.add(main.value_mass[i]);
    gsum.add(main.grad_mass[i]);
    nb.per_layer.emplace_back(main.levels[i], main.grad_mass[i]);
  }
  const double vp = vsum.value(), gp = gsum.value();
  nb.l_p_part = std::pow(vp, 1.0 / p);
  nb.total = *nb.l_p_part + std::pow(gp, 1.0 / p);

  NeumaierSum vext, gext;
  vext.add(vp);
  gext.add(gp);
  for (std::size_t i = 0; i < finer.levels.size(); ++i) {
    vext.add(finer.value_mass[i]);
    gext.add(finer.grad_mass[i]);
  }
  nb.truncation_tail_estimate = std::pow(vext.value(), 1.0 / p) +
                                std::pow(gext.value(), 1.0 / p) - nb.total;
  return nb;
}

namespace {

Box grid_hull(const BoundaryGridFunction& g) {
  if (g.support.valid() && g.support.size() == g.dim) return g.support;
  Box hull;
  bool any = false;
  for (const auto& [q, v] : g.values) {
    const Box cell = realize(q);
    if (!any) {
      hull = cell;
      any = true;
    } else {
      for (int i = 0; i < g.dim; ++i) {
        hull.lo[i] = std::min(hull.lo[i], cell.lo[i]);
        hull.hi[i] = std::max(hull.hi[i], cell.hi[i]);
      }
    }
  }
  return any ? hull : Box();
}

}  // namespace

NormBreakdown besov_seminorm(const BoundaryGridFunction& g,
                             const BesovParams& bp) {
  bp.validate();
  if (layer_level(bp.j_max) > g.level)
    throw LevelError("besov: grid at level " + std::to_string(g.level) +
                     " is too coarse for layer " + std::to_string(bp.j_max));

  NormBreakdown nb;
  const Box hull = grid_hull(g);
  std::map<int, BoundaryGridFunction> coarse_cache;
  auto at_level = [&](int lev) -> const BoundaryGridFunction& {
    auto it = coarse_cache.find(lev);
    if (it == coarse_cache.end())
      it = coarse_cache.emplace(lev, coarsen_to(g, lev)).first;
    return it->second;
  };

  NeumaierSum total;
  for (int j = 0; j <= bp.j_max; ++j) {
    const int n = layer_level(j);
    const int nc = layer_level(j - 1);
    double layer_weighted = 0;
    if (hull.valid()) {
      const auto& fine = at_level(n);
      const auto& coarse = at_level(nc);
      // One coarse-neighbor margin: any cube further out only ever
      // compares zero against zero.
      const Box region = hull.inflated(pow2(-nc));
      const double vol = pow2(-n * g.dim);
      NeumaierSum layer;
      for (const CubeIndex& Q : layer_cubes(j, region)) {
        const double aq = fine.value_of(Q);
        double cell = 0;
        for (const CubeIndex& Qn : selected_neighbors(Q)) {
          if (Qn == Q) continue;
          const double bq =
              (Qn.level == n ? fine : coarse).value_of(Qn);
          cell += std::pow(std::abs(aq - bq), bp.p);
        }
        layer.add(vol * cell);
      }
      layer_weighted =
          std::pow(double(n) + 2.0, bp.lambda_or_gamma) * layer.value();
    }
    nb.per_layer.emplace_back(j, layer_weighted);
    total.add(layer_weighted);
  }
  nb.total = total.value();
  nb.truncation_tail_estimate =
      nb.per_layer.empty() ? 0.0 : nb.per_layer.back().second;
  return nb;
}

NormBreakdown besov_norm(const BoundaryGridFunction& g, const BesovParams& bp) {
  const NormBreakdown semi = besov_seminorm(g, bp);
  const double lp = boundary_lp_norm(g, bp.p);
  NormBreakdown nb;
  nb.per_layer = semi.per_layer;
  nb.l_p_part = lp;
  nb.total = lp + std::pow(semi.total, 1.0 / bp.p);
  const double without_last =
      semi.total - (semi.per_layer.empty() ? 0.0 : semi.per_layer.back().second);
  nb.truncation_tail_estimate =
      nb.total - (lp + std::pow(std::max(without_last, 0.0), 1.0 / bp.p));
  return nb;
}

double boundary_lp_norm(const BoundaryGridFunction& g, double p) {
  if (!(p >= 1)) throw InvalidParams("boundary_lp_norm: p must be >= 1");
  const double vol = pow2(-g.level * g.dim);
  NeumaierSum s;
  for (const CubeIndex& Q : g.sorted_cubes())
    s.add(vol * std::pow(std::abs(g.values.at(Q)), p));
  return std::pow(s.value(), 1.0 / p);
}

std::pair<double, double> poincare_check(const ScalarField& f, const Box& Q) {
  if (!f.grad) throw MissingGradient("poincare_check: field lacks a gradient");
  if (!Q.valid() || Q.size() != f.dim)
    throw DomainError("poincare_check: box does not match the field");

  // Fixed composite rule: 5-point Gauss on an 8-per-axis grid.  The check
  // feeds a constant-fitting experiment, so a fixed resolution (no adaptive
  // flags) keeps the two sides directly comparable across boxes.
  const int order = 5, cells = 8;
  const double volume = Q.volume();
  const TensorResult mean_pass = tensor_integrate(
      [&f](const Point& x, double* comp) { comp[0] = f.eval(x); }, 1, Q,
      nullptr, order, cells, 1e-8, 0);
  const double mean = mean_pass.value[0] / volume;

  const TensorResult dev_pass = tensor_integrate(
      [&f, mean](const Point& x, double* comp) {
        comp[0] = std::abs(f.eval(x) - mean);
        comp[1] = euclid(f.grad(x));
      },
      2, Q, nullptr, order, cells, 1e-8, 0);
  return {dev_pass.value[0] / volume,
          Q.max_extent() * dev_pass.value[1] / volume};
}

}  // namespace tracelab
