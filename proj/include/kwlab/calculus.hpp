#pragma once

// Metric-aware calculus on SurfaceGrid fields. Differentiation is spectral:
// Delta_flat acts as the Fourier multiplier -4 pi^2 |k|^2, first derivatives
// as 2 pi i k with the Nyquist mode zeroed (the usual convention for real
// output; grad_norm uses the same multipliers so the two routes agree
// exactly). The conformal metric enters algebraically:
//   Delta_g f = e^{-2w} Delta_flat f
//   int f dv_g = sum f e^{2w} / N^2
//   int |grad f|_g^2 dv_g = int |grad_flat f|^2 dx   (conformal invariance)

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "kwlab/errors.hpp"
#include "kwlab/fft.hpp"
#include "kwlab/grid.hpp"
#include "kwlab/util.hpp"

namespace kwlab {

using Spectrum = std::vector<std::complex<double>>;

inline Spectrum spectrum_of(const ScalarField& f) { return fft::forward(f.values, f.n()); }

// Delta_g f, div-grad sign convention (<= 0 at an interior maximum).
inline ScalarField laplacian_g(const ScalarField& f) {
  const int n = f.n();
  auto spec = spectrum_of(f);
  for (int iy = 0; iy < n; ++iy) {
    const double ky = fft::freq(iy, n);
    for (int ix = 0; ix < n; ++ix) {
      const double kx = fft::freq(ix, n);
      spec[f.grid->idx(ix, iy)] *= -4.0 * kPi * kPi * (kx * kx + ky * ky);
    }
  }
  auto vals = fft::inverse_real(std::move(spec), n);
  const auto& e2w = f.grid->area_element();
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] /= e2w[i];
  return ScalarField(f.grid, std::move(vals));
}

// int f dv_g (quadrature weight e^{2w} / N^2 per node).
inline double integral_g(const ScalarField& f) {
  const auto& e2w = f.grid->area_element();
  const double cell = 1.0 / (static_cast<double>(f.n()) * f.n());
  KahanSum s;
  for (std::size_t i = 0; i < f.values.size(); ++i) s.add(f.values[i] * e2w[i] * cell);
  return s.value();
}

inline double integral_flat(const ScalarField& f) {
  const double cell = 1.0 / (static_cast<double>(f.n()) * f.n());
  KahanSum s;
  for (double v : f.values) s.add(v * cell);
  return s.value();
}

// Flat gradient fields (spectral, Nyquist zeroed in each direction).
inline std::pair<ScalarField, ScalarField> gradient_flat(const ScalarField& f) {
  const int n = f.n();
  const auto spec = spectrum_of(f);
  Spectrum sx(spec.size()), sy(spec.size());
  for (int iy = 0; iy < n; ++iy) {
    const int ky = fft::freq(iy, n);
    for (int ix = 0; ix < n; ++ix) {
      const int kx = fft::freq(ix, n);
      const auto i = f.grid->idx(ix, iy);
      const std::complex<double> imag_unit(0.0, 1.0);
      sx[i] = (kx == -n / 2) ? 0.0 : spec[i] * imag_unit * (kTwoPi * kx);
      sy[i] = (ky == -n / 2) ? 0.0 : spec[i] * imag_unit * (kTwoPi * ky);
    }
  }
  return {ScalarField(f.grid, fft::inverse_real(std::move(sx), n)),
          ScalarField(f.grid, fft::inverse_real(std::move(sy), n))};
}

// Dirichlet energy int |grad f|_g^2 dv_g via Parseval on the same multipliers
// as gradient_flat; independent of w by conformal invariance.
inline double grad_norm_sq_g(const ScalarField& f) {
  const int n = f.n();
  const auto spec = spectrum_of(f);
  const double norm = 1.0 / (static_cast<double>(n) * n);
  KahanSum s;
  for (int iy = 0; iy < n; ++iy) {
    const int ky = fft::freq(iy, n);
    const double my = (ky == -n / 2) ? 0.0 : kTwoPi * ky;
    for (int ix = 0; ix < n; ++ix) {
      const int kx = fft::freq(ix, n);
      const double mx = (kx == -n / 2) ? 0.0 : kTwoPi * kx;
      const double a = std::norm(spec[f.grid->idx(ix, iy)] * norm);
      s.add((mx * mx + my * my) * a);
    }
  }
  return s.value();
}

// Local approximation e^{w(p)} |x-p| to the geodesic distance; only valid
// well inside the injectivity radius of the torus chart.
inline double geodesic_distance_approx(const SurfaceGrid& grid, Node p, Node x) {
  const double d = grid.flat_distance(p, x);
  if (d >= 0.25)
    throw DistanceRangeError("flat separation " + std::to_string(d) +
                             " >= 1/4: local distance approximation invalid");
  return std::exp(grid.w_at(p)) * d;
}

// Solve (c0 - Delta_flat) u = rhs spectrally (c0 > 0).
inline ScalarField helmholtz_solve_flat(const ScalarField& rhs, double c0) {
  const int n = rhs.n();
  auto spec = spectrum_of(rhs);
  for (int iy = 0; iy < n; ++iy) {
    const double ky = fft::freq(iy, n);
    for (int ix = 0; ix < n; ++ix) {
      const double kx = fft::freq(ix, n);
      spec[rhs.grid->idx(ix, iy)] /= c0 + 4.0 * kPi * kPi * (kx * kx + ky * ky);
    }
  }
  return ScalarField(rhs.grid, fft::inverse_real(std::move(spec), n));
}

// Solve Delta_flat u = rhs with the zero mode dropped; u has zero flat mean.
// The k = 0 content of rhs is discarded (caller guarantees solvability).
inline ScalarField poisson_solve_flat(const ScalarField& rhs) {
  const int n = rhs.n();
  auto spec = spectrum_of(rhs);
  spec[0] = 0.0;
  for (int iy = 0; iy < n; ++iy) {
    const double ky = fft::freq(iy, n);
    for (int ix = 0; ix < n; ++ix) {
      if (ix == 0 && iy == 0) continue;
      const double kx = fft::freq(ix, n);
      spec[rhs.grid->idx(ix, iy)] /= -4.0 * kPi * kPi * (kx * kx + ky * ky);
    }
  }
  return ScalarField(rhs.grid, fft::inverse_real(std::move(spec), n));
}

// L^q norm of |grad f|_g in dv_g: ( int (e^{-w}|grad_flat f|)^q e^{2w} dx )^{1/q}.
inline double grad_lq_norm_g(const ScalarField& f, double q) {
  auto [gx, gy] = gradient_flat(f);
  const auto& w = f.grid->conformal_factor();
  const double cell = 1.0 / (static_cast<double>(f.n()) * f.n());
  KahanSum s;
  for (std::size_t i = 0; i < gx.values.size(); ++i) {
    const double mag = std::hypot(gx.values[i], gy.values[i]);
    s.add(std::pow(mag, q) * std::exp((2.0 - q) * w[i]) * cell);
  }
  return std::pow(s.value(), 1.0 / q);
}

}  // namespace kwlab
