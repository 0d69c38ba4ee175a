#pragma once

// Green function of Delta_g with the 8 pi normalization:
//   Delta_g G_p = 8 pi - 8 pi delta_p,   int G_p dv_g = 0.
// In flat form the right-hand side is 8 pi e^{2w} - 8 pi delta_p^flat; on a
// grid node the band-limited flat delta is the Kronecker spike of amplitude
// N^2, so the Fourier solve keeps every mode of the delta up to Nyquist.
// Near the pole G = -4 log r + A + b1 x1 + b2 x2 + c1 x1^2 + 2 c2 x1 x2
// + c3 x2^2 + ..., and the Robin constant A plus the expansion coefficients
// are recovered by a least-squares fit on an annulus clear of the
// band-limited core.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "kwlab/calculus.hpp"
#include "kwlab/errors.hpp"
#include "kwlab/grid.hpp"
#include "kwlab/util.hpp"

namespace kwlab {

struct GreenExpansion {
  double b1 = 0, b2 = 0;      // linear terms
  double c1 = 0, c2 = 0, c3 = 0;  // quadratic terms, c2 halved per the 2 c2 x1 x2 form
};

struct GreenData {
  Node pole;
  ScalarField G;
  double robin_A = std::numeric_limits<double>::quiet_NaN();
  GreenExpansion expansion;
  double fit_residual = std::numeric_limits<double>::quiet_NaN();
  double fit_r1 = 0, fit_r2 = 0;

  bool fitted() const { return !std::isnan(robin_A); }
};

inline GreenData solve_green(GridPtr grid, Node p) {
  const int n = grid->n();
  ScalarField rhs(grid);
  const auto& e2w = grid->area_element();
  for (std::size_t i = 0; i < rhs.values.size(); ++i) rhs.values[i] = kEightPi * e2w[i];
  rhs.values[grid->idx(p)] -= kEightPi * static_cast<double>(n) * n;
  ScalarField G = poisson_solve_flat(rhs);
  const double mean_g = integral_g(G);
  for (double& v : G.values) v -= mean_g;
  return GreenData{p, std::move(G)};
}

namespace detail {

struct AnnulusSample {
  double s1, s2, r;  // local coordinates e^{w(p)} * wrapped offset, and radius
  double g;          // Green value at the node
};

inline std::vector<AnnulusSample> annulus_samples(const GreenData& green, double r1,
                                                  double r2) {
  const auto& grid = *green.G.grid;
  const int n = grid.n();
  const double scale = std::exp(grid.w_at(green.pole));
  const double px = grid.x_of(green.pole.ix), py = grid.y_of(green.pole.iy);
  std::vector<AnnulusSample> rows;
  for (int iy = 0; iy < n; ++iy) {
    const double dy = wrap_delta(grid.y_of(iy) - py) * scale;
    for (int ix = 0; ix < n; ++ix) {
      const double dx = wrap_delta(grid.x_of(ix) - px) * scale;
      const double r = std::hypot(dx, dy);
      if (r < r1 || r > r2) continue;
      rows.push_back({dx, dy, r, green.G.at(ix, iy)});
    }
  }
  return rows;
}

}  // namespace detail

// Least-squares fit of G + 4 log r against {1, x1, x2, x1^2, x1 x2, x2^2} on
// the annulus r1 <= |x-p|_g <= r2. The constant term is the Robin constant;
// the linear/quadratic terms absorb the smooth remainder so the constant
// stays clean. Returns a copy of `green` with the fit fields filled in.
inline GreenData fit_robin(const GreenData& green, double r1, double r2) {
  const auto& grid = *green.G.grid;
  const double core = 8.0 / grid.n();
  if (r1 <= core)
    throw CoreContaminationError("inner fit radius " + std::to_string(r1) +
                                 " reaches the band-limited core (8/N = " +
                                 std::to_string(core) + ")");
  if (!(r1 < r2 && r2 < 0.25))
    throw std::invalid_argument("need 8/N < r1 < r2 < 1/4");
  const auto rows = detail::annulus_samples(green, r1, r2);
  if (rows.size() < 50) throw AnnulusTooThinError(rows.size());

  // normal equations over the 6-term basis, columns scaled by the annulus
  // radius to keep the system well conditioned
  const double sc = 1.0 / r2;
  std::array<std::array<double, 6>, 6> ata{};
  std::array<double, 6> atb{};
  for (const auto& row : rows) {
    const double t = row.g + 4.0 * std::log(row.r);
    const std::array<double, 6> basis = {1.0,
                                         row.s1 * sc,
                                         row.s2 * sc,
                                         row.s1 * row.s1 * sc * sc,
                                         row.s1 * row.s2 * sc * sc,
                                         row.s2 * row.s2 * sc * sc};
    for (std::size_t a = 0; a < 6; ++a) {
      for (std::size_t b = a; b < 6; ++b) ata[a][b] += basis[a] * basis[b];
      atb[a] += basis[a] * t;
    }
  }
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = 0; b < a; ++b) ata[a][b] = ata[b][a];
  const auto coef = detail::solve_dense<6>(ata, atb);

  GreenData out = green;
  out.robin_A = coef[0];
  out.expansion.b1 = coef[1] * sc;
  out.expansion.b2 = coef[2] * sc;
  out.expansion.c1 = coef[3] * sc * sc;
  out.expansion.c2 = 0.5 * coef[4] * sc * sc;
  out.expansion.c3 = coef[5] * sc * sc;
  out.fit_r1 = r1;
  out.fit_r2 = r2;
  KahanSum rss;
  for (const auto& row : rows) {
    const double t = row.g + 4.0 * std::log(row.r);
    const double model = coef[0] + coef[1] * row.s1 * sc + coef[2] * row.s2 * sc +
                         coef[3] * row.s1 * row.s1 * sc * sc +
                         coef[4] * row.s1 * row.s2 * sc * sc +
                         coef[5] * row.s2 * row.s2 * sc * sc;
    rss.add((t - model) * (t - model));
  }
  out.fit_residual = std::sqrt(rss.value() / static_cast<double>(rows.size()));
  return out;
}

// Fit G against {log r, 1, x1, x2, x1^2, x1 x2, x2^2} and return the log-r
// coefficient; recovers -4 on a clean annulus.
inline double fit_log_slope(const GreenData& green, double r1, double r2) {
  const auto rows = detail::annulus_samples(green, r1, r2);
  if (rows.size() < 50) throw AnnulusTooThinError(rows.size());
  const double sc = 1.0 / r2;
  std::array<std::array<double, 7>, 7> ata{};
  std::array<double, 7> atb{};
  for (const auto& row : rows) {
    const std::array<double, 7> basis = {std::log(row.r),
                                         1.0,
                                         row.s1 * sc,
                                         row.s2 * sc,
                                         row.s1 * row.s1 * sc * sc,
                                         row.s1 * row.s2 * sc * sc,
                                         row.s2 * row.s2 * sc * sc};
    for (std::size_t a = 0; a < 7; ++a) {
      for (std::size_t b = a; b < 7; ++b) ata[a][b] += basis[a] * basis[b];
      atb[a] += basis[a] * row.g;
    }
  }
  for (std::size_t a = 0; a < 7; ++a)
    for (std::size_t b = 0; b < a; ++b) ata[a][b] = ata[b][a];
  return detail::solve_dense<7>(ata, atb)[0];
}

}  // namespace kwlab
