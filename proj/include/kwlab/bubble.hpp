#pragma once

// Closed-form quantities of the standard bubble
//   phi0(x) = -2 log(1 + pi h(p) |x|^2)
// which is the rescaled limit profile of blow-up sequences. Everything here
// is planar (R^2); the grid modules consume these through rescaled windows.

#include <cmath>

#include "kwlab/errors.hpp"
#include "kwlab/grid.hpp"
#include "kwlab/util.hpp"

namespace kwlab {

struct BubbleProfile {
  double hp = 1.0;     // h at the concentration point, > 0
  Node center;
  double scale = 1.0;  // r = e^{-lambda/2}

  static BubbleProfile from_peak(double hp, Node center, double lambda) {
    if (hp <= 0) throw NonpositiveWeightError("bubble needs h(p) > 0");
    return {hp, center, std::exp(-0.5 * lambda)};
  }
};

// phi0 at a planar point; <= 0 with equality only at the origin.
inline double bubble_value(const BubbleProfile& profile, double x1, double x2) {
  return -2.0 * std::log1p(kPi * profile.hp * (x1 * x1 + x2 * x2));
}

inline double bubble_value_radial(double hp, double rho) {
  return -2.0 * std::log1p(kPi * hp * rho * rho);
}

// Dirichlet energy of phi0 over B_R, asymptotic closed form
// 16 pi log(1 + pi hp R^2) - 16 pi  (exact up to +16 pi / (1 + pi hp R^2)).
inline double bubble_energy(double hp, double R) {
  if (hp <= 0) throw NonpositiveWeightError("bubble needs h(p) > 0");
  return 16.0 * kPi * (std::log1p(kPi * hp * R * R) - 1.0);
}

namespace detail {

// Composite Simpson on [0, R]; integrands here are smooth.
template <typename F>
double simpson(F&& f, double a, double b, int panels) {
  const double h = (b - a) / (2 * panels);
  KahanSum s;
  s.add(f(a));
  s.add(f(b));
  for (int i = 1; i < 2 * panels; ++i) s.add((i % 2 ? 4.0 : 2.0) * f(a + i * h));
  return s.value() * h / 3.0;
}

}  // namespace detail

// Radial quadrature of int_{B_R} |grad phi0|^2 dx. Companion check for the
// closed form; the two agree only asymptotically in R, so callers get both.
inline double bubble_energy_quadrature(double hp, double R, int panels = 20000) {
  if (hp <= 0) throw NonpositiveWeightError("bubble needs h(p) > 0");
  auto integrand = [hp](double r) {
    const double d = 1.0 + kPi * hp * r * r;
    const double g = 4.0 * kPi * hp * r / d;  // |phi0'(r)|
    return g * g * kTwoPi * r;
  };
  return detail::simpson(integrand, 0.0, R, panels);
}

struct BubbleEnergyReport {
  double closed_form;
  double quadrature;
  double gap;  // closed_form - quadrature; -16 pi / (1 + pi hp R^2) in the limit
};

inline BubbleEnergyReport bubble_energy_report(double hp, double R) {
  const double cf = bubble_energy(hp, R);
  const double q = bubble_energy_quadrature(hp, R);
  return {cf, q, cf - q};
}

// int_{R^2} e^{alpha phi0} dx = 1 / ((2 alpha - 1) hp); diverges for alpha <= 1/2.
inline double bubble_alpha_mass(double hp, double alpha) {
  if (hp <= 0) throw NonpositiveWeightError("bubble needs h(p) > 0");
  if (alpha <= 0.5) throw AlphaTooSmallError(alpha);
  return 1.0 / ((2.0 * alpha - 1.0) * hp);
}

// Radial quadrature of int_{B_R} hp e^{phi0} dx (limit value 1).
inline double bubble_mass_quadrature(double hp, double R, int panels = 20000) {
  if (hp <= 0) throw NonpositiveWeightError("bubble needs h(p) > 0");
  auto integrand = [hp](double r) {
    const double d = 1.0 + kPi * hp * r * r;
    return hp / (d * d) * kTwoPi * r;
  };
  return detail::simpson(integrand, 0.0, R, panels);
}

}  // namespace kwlab
