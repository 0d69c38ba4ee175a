#pragma once

// Independent oracles used by the tests. These deliberately avoid the
// library's spectral code paths: the Ewald sum is a lattice method, the
// Laplacian oracle is finite differences, the quadratures are 1-D Simpson.

#include <cmath>
#include <functional>
#include <vector>

#include "kwlab/grid.hpp"

namespace oracles {

// Robin constant of the unit square torus via Ewald splitting of the Green
// function of (-Delta) normalized by  -Delta G_std = delta - 1, int G_std = 0:
//   G_std(x) ~ -(1/2 pi) log|x| + c_t  near 0.
// The library's convention (Delta G = 8 pi - 8 pi delta, G ~ -4 log r + A)
// gives A = 8 pi c_t.
//
// c_t = (log(4 t0) - gamma)/(4 pi) - t0
//       + (1/4 pi) sum_{n != 0} E1(|n|^2 / (4 t0))
//       + sum_{k != 0} exp(-4 pi^2 |k|^2 t0) / (4 pi^2 |k|^2)
inline double ewald_torus_ct(double t0 = 0.02, int nmax = 8, int kmax = 16) {
  constexpr double gamma = 0.57721566490153286060651209008240243;
  constexpr double pi = 3.14159265358979323846;
  double real_sum = 0.0;
  for (int nx = -nmax; nx <= nmax; ++nx)
    for (int ny = -nmax; ny <= nmax; ++ny) {
      if (nx == 0 && ny == 0) continue;
      const double d2 = static_cast<double>(nx) * nx + static_cast<double>(ny) * ny;
      real_sum += -std::expint(-d2 / (4.0 * t0));  // E1(x) = -Ei(-x)
    }
  double k_sum = 0.0;
  for (int kx = -kmax; kx <= kmax; ++kx)
    for (int ky = -kmax; ky <= kmax; ++ky) {
      if (kx == 0 && ky == 0) continue;
      const double k2 = static_cast<double>(kx) * kx + static_cast<double>(ky) * ky;
      k_sum += std::exp(-4.0 * pi * pi * k2 * t0) / (4.0 * pi * pi * k2);
    }
  return (std::log(4.0 * t0) - gamma) / (4.0 * pi) - t0 + real_sum / (4.0 * pi) + k_sum;
}

inline double ewald_torus_robin_A() {
  constexpr double pi = 3.14159265358979323846;
  return 8.0 * pi * ewald_torus_ct();
}

// Second-order 5-point finite-difference Delta_g f = e^{-2w} Delta_flat f.
inline kwlab::ScalarField fd_laplacian_g(const kwlab::ScalarField& f) {
  const auto& grid = *f.grid;
  const int n = grid.n();
  const double inv_h2 = static_cast<double>(n) * n;
  kwlab::ScalarField out(f.grid);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const int xm = (ix + n - 1) % n, xp = (ix + 1) % n;
      const int ym = (iy + n - 1) % n, yp = (iy + 1) % n;
      const double lap_flat = (f.at(xp, iy) + f.at(xm, iy) + f.at(ix, yp) +
                               f.at(ix, ym) - 4.0 * f.at(ix, iy)) * inv_h2;
      out.at(ix, iy) = lap_flat / grid.area_element()[grid.idx(ix, iy)];
    }
  return out;
}

// Composite Simpson for the radial quadrature oracles.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int panels) {
  const double h = (b - a) / (2 * panels);
  double s = f(a) + f(b);
  for (int i = 1; i < 2 * panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Path-integral length of the straight segment from p to x under ds = e^w |dx|.
inline double segment_length(const kwlab::SurfaceGrid& grid, kwlab::Node p, kwlab::Node x,
                             const std::function<double(double, double)>& w_eval,
                             int panels = 2000) {
  const double x0 = grid.x_of(p.ix), y0 = grid.y_of(p.iy);
  const double dx = kwlab::wrap_delta(grid.x_of(x.ix) - x0);
  const double dy = kwlab::wrap_delta(grid.y_of(x.iy) - y0);
  const double len = std::hypot(dx, dy);
  auto integrand = [&](double t) { return std::exp(w_eval(x0 + t * dx, y0 + t * dy)); };
  return len * simpson(integrand, 0.0, 1.0, panels);
}

// Bilinear interpolation of a field at a fractional position (periodic).
inline double interp(const kwlab::ScalarField& f, double x, double y) {
  const int n = f.n();
  const double gx = (x - std::floor(x)) * n;
  const double gy = (y - std::floor(y)) * n;
  const int i0 = static_cast<int>(gx) % n, j0 = static_cast<int>(gy) % n;
  const int i1 = (i0 + 1) % n, j1 = (j0 + 1) % n;
  const double fx = gx - std::floor(gx), fy = gy - std::floor(gy);
  return f.at(i0, j0) * (1 - fx) * (1 - fy) + f.at(i1, j0) * fx * (1 - fy) +
         f.at(i0, j1) * (1 - fx) * fy + f.at(i1, j1) * fx * fy;
}

// Green-identity evaluation of the outer Dirichlet energy of G over the
// complement of B_delta around the pole (flat torus):
//   int_{M \ B_delta} |grad G|^2 = oint_{dB_delta} G dG/dn ds - 8 pi int_{M \ B_delta} G
// with n the outward normal of the outer domain (pointing at the pole). The
// ring integral uses bilinear interpolation and radial central differences;
// everything here is independent of the spectral gradient path under test.
inline double outer_energy_green_identity(const kwlab::ScalarField& G, kwlab::Node pole,
                                          double delta, int ring_points = 4096) {
  const int n = G.n();
  const double cx = static_cast<double>(pole.ix) / n;
  const double cy = static_cast<double>(pole.iy) / n;
  const double step = 0.5 / n;
  double ring = 0.0;
  constexpr double pi = 3.14159265358979323846;
  for (int k = 0; k < ring_points; ++k) {
    const double th = 2.0 * pi * (k + 0.5) / ring_points;
    const double ux = std::cos(th), uy = std::sin(th);
    const double g0 = interp(G, cx + delta * ux, cy + delta * uy);
    const double gp = interp(G, cx + (delta + step) * ux, cy + (delta + step) * uy);
    const double gm = interp(G, cx + (delta - step) * ux, cy + (delta - step) * uy);
    const double dGdr = (gp - gm) / (2.0 * step);
    ring += g0 * (-dGdr);  // dG/dn with n = -e_r
  }
  ring *= 2.0 * pi * delta / ring_points;
  // volume term: -8 pi int over nodes outside the ball
  double vol = 0.0;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double dx = kwlab::wrap_delta(static_cast<double>(ix) / n - cx);
      const double dy = kwlab::wrap_delta(static_cast<double>(iy) / n - cy);
      if (std::hypot(dx, dy) > delta) vol += G.at(ix, iy);
    }
  vol /= static_cast<double>(n) * n;
  return ring - 8.0 * pi * vol;
}

}  // namespace oracles
