#pragma once

// The solvability threshold machinery:
//   C0 = -8 pi - 8 pi log pi - 4 pi max_{p in M_+} (A_p + 2 log h(p))
// (the explicit lower bound for J under blow-up) and the pointwise condition
//   Delta_g log h(p0) + 8 pi - 2 K(p0) > 0
// at the argmax p0. The maximization runs over a pole lattice restricted to
// M_+, one Green solve per pole, refined once around the coarse argmax.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kwlab/errors.hpp"
#include "kwlab/functional.hpp"
#include "kwlab/greens.hpp"

namespace kwlab {

struct LandscapePoint {
  Node p;
  double robin_A;
  double value;  // A_p + 2 log h(p); only meaningful where h > 0
};

struct ThresholdReport {
  double C0 = 0;
  Node argmax_p0;
  double A_p0 = 0;
  double h_p0 = 0;
  double djlw_value = 0;
  bool djlw_satisfied = false;
  double margin = 1e-6;
  std::vector<LandscapePoint> landscape;
};

struct ThresholdOptions {
  int lattice = 16;        // poles per side (spacing 1/16)
  double fit_r1 = 0.05;    // Robin fit annulus, valid for N >= 256
  double fit_r2 = 0.15;
  bool refine = true;      // one bisection level around the coarse argmax
  double margin = 1e-6;    // strict-positivity margin for the condition
};

// Delta_g log h + 8 pi - 2 K at p0, with Delta log h taken by fourth-order
// centered differences on the local patch (a global spectral log is undefined
// once h changes sign). Requires h > 0 on the 9-point cross stencil.
inline double djlw_check(const FunctionalContext& ctx, Node p0) {
  const auto& grid = *ctx.grid;
  const int n = grid.n();
  auto hval = [&](int ix, int iy) {
    return ctx.h.at(((ix % n) + n) % n, ((iy % n) + n) % n);
  };
  if (hval(p0.ix, p0.iy) <= 0.0)
    throw NonpositiveWeightError("h(p0) <= 0 at (" + std::to_string(p0.ix) + "," +
                                 std::to_string(p0.iy) + ")");
  for (int off = -2; off <= 2; ++off) {
    if (hval(p0.ix + off, p0.iy) <= 0.0 || hval(p0.ix, p0.iy + off) <= 0.0)
      throw NonpositiveWeightError("h <= 0 on the log-h stencil around p0");
  }
  auto lh = [&](int dx, int dy) { return std::log(hval(p0.ix + dx, p0.iy + dy)); };
  const double h2 = 1.0 / (static_cast<double>(n) * n);  // (1/N)^2
  const double dxx =
      (-lh(-2, 0) + 16 * lh(-1, 0) - 30 * lh(0, 0) + 16 * lh(1, 0) - lh(2, 0)) / (12 * h2);
  const double dyy =
      (-lh(0, -2) + 16 * lh(0, -1) - 30 * lh(0, 0) + 16 * lh(0, 1) - lh(0, 2)) / (12 * h2);
  const double lap_flat = dxx + dyy;
  const double lap_g = lap_flat / grid.area_element()[grid.idx(p0)];
  return lap_g + kEightPi - 2.0 * grid.gauss_curvature()[grid.idx(p0)];
}

// One Green solve + Robin fit per lattice pole.
inline std::vector<LandscapePoint> robin_landscape(const FunctionalContext& ctx,
                                                   int lattice, double r1, double r2) {
  const int n = ctx.grid->n();
  if (lattice < 2 || n % lattice != 0)
    throw std::invalid_argument("lattice must divide N");
  const int stride = n / lattice;
  std::vector<LandscapePoint> points;
  points.reserve(static_cast<std::size_t>(lattice) * lattice);
  for (int jy = 0; jy < lattice; ++jy)
    for (int jx = 0; jx < lattice; ++jx) {
      const Node p{jx * stride, jy * stride};
      const auto green = fit_robin(solve_green(ctx.grid, p), r1, r2);
      const double h = ctx.h.at(p);
      const double value = h > 0 ? green.robin_A + 2.0 * std::log(h)
                                 : -std::numeric_limits<double>::infinity();
      points.push_back({p, green.robin_A, value});
    }
  return points;
}

// Maximize A_p + 2 log h(p) over the supplied map restricted to M_+; ties
// break toward the lowest row-major node index for determinism.
inline ThresholdReport compute_C0(const FunctionalContext& ctx,
                                  const std::vector<LandscapePoint>& robin_map,
                                  double margin = 1e-6) {
  const auto& grid = *ctx.grid;
  bool found = false;
  std::size_t best_idx = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < robin_map.size(); ++i) {
    const auto& pt = robin_map[i];
    if (ctx.h.at(pt.p) <= 0.0) continue;
    const bool better =
        !found || pt.value > best ||
        (pt.value == best && grid.idx(pt.p) < grid.idx(robin_map[best_idx].p));
    if (better) {
      found = true;
      best = pt.value;
      best_idx = i;
    }
  }
  if (!found) throw EmptyPositiveSetError();

  ThresholdReport report;
  report.argmax_p0 = robin_map[best_idx].p;
  report.A_p0 = robin_map[best_idx].robin_A;
  report.h_p0 = ctx.h.at(report.argmax_p0);
  report.C0 = -kEightPi - kEightPi * std::log(kPi) - 4.0 * kPi * best;
  report.djlw_value = djlw_check(ctx, report.argmax_p0);
  report.margin = margin;
  report.djlw_satisfied = report.djlw_value > margin;
  report.landscape = robin_map;
  return report;
}

// Landscape + coarse max + one half-spacing refinement pass around it.
inline ThresholdReport compute_thresholds(const FunctionalContext& ctx,
                                          const ThresholdOptions& opts = {}) {
  auto map = robin_landscape(ctx, opts.lattice, opts.fit_r1, opts.fit_r2);
  ThresholdReport coarse = compute_C0(ctx, map, opts.margin);
  if (!opts.refine) return coarse;

  const int n = ctx.grid->n();
  const int half = n / opts.lattice / 2;
  if (half >= 1) {
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const Node p{(((coarse.argmax_p0.ix + dx * half) % n) + n) % n,
                     (((coarse.argmax_p0.iy + dy * half) % n) + n) % n};
        if (ctx.h.at(p) <= 0.0) continue;
        const auto green = fit_robin(solve_green(ctx.grid, p), opts.fit_r1, opts.fit_r2);
        map.push_back({p, green.robin_A, green.robin_A + 2.0 * std::log(ctx.h.at(p))});
      }
  }
  return compute_C0(ctx, map, opts.margin);
}

}  // namespace kwlab
