#pragma once

// The (possibly perturbed) functional
//   J_eps(u) = 1/2 int |grad u|^2 dv_g + (8pi - eps) int u dv_g
//              - (8pi - eps) log int h e^u dv_g
// with sign-changing weight h. The log term is only defined while
// int h e^u dv_g > 0; leaving that region is surfaced as a typed error, not a
// NaN. J is invariant under u -> u + c, so gauges are free to choose;
// normalize_H1 shifts onto the constraint int h e^u dv_g = 1.

#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "kwlab/calculus.hpp"
#include "kwlab/errors.hpp"
#include "kwlab/grid.hpp"

namespace kwlab {

struct FunctionalContext {
  FunctionalContext(GridPtr g, ScalarField weight, double eps_in)
      : grid(std::move(g)), h(std::move(weight)), eps(eps_in) {
    if (h.grid.get() != grid.get())
      throw std::invalid_argument("weight lives on a different grid");
    if (!(eps >= 0.0 && eps < kEightPi))
      throw std::invalid_argument("eps must lie in [0, 8 pi)");
    max_h = h.max();
    if (max_h <= 0.0)
      throw NonpositiveWeightError("max h must be positive (necessary for solvability)");
    positive_mask.resize(h.values.size());
    for (std::size_t i = 0; i < h.values.size(); ++i)
      positive_mask[i] = h.values[i] > 0.0 ? 1 : 0;
  }

  FunctionalContext with_eps(double new_eps) const {
    FunctionalContext c = *this;
    if (!(new_eps >= 0.0 && new_eps < kEightPi))
      throw std::invalid_argument("eps must lie in [0, 8 pi)");
    c.eps = new_eps;
    return c;
  }

  GridPtr grid;
  ScalarField h;
  double eps = 0.0;
  std::vector<std::uint8_t> positive_mask;  // M_+ = {h > 0}
  double max_h = 0.0;
};

// int h e^u dv_g; the admissibility functional.
inline double weighted_mass(const FunctionalContext& ctx, const ScalarField& u) {
  const auto& e2w = ctx.grid->area_element();
  const double cell = 1.0 / (static_cast<double>(ctx.grid->n()) * ctx.grid->n());
  KahanSum s;
  for (std::size_t i = 0; i < u.values.size(); ++i)
    s.add(ctx.h.values[i] * std::exp(u.values[i]) * e2w[i] * cell);
  return s.value();
}

inline double eval_J(const FunctionalContext& ctx, const ScalarField& u) {
  const double mass = weighted_mass(ctx, u);
  if (mass <= 0.0) throw NonpositiveMassError(mass);
  const double a = kEightPi - ctx.eps;
  return 0.5 * grad_norm_sq_g(u) + a * integral_g(u) - a * std::log(mass);
}

// L^2(dv_g) gradient: -Delta_g u + (8pi - eps)(1 - h e^u / int h e^u dv_g).
// Has zero dv_g mean and is invariant under u -> u + c.
inline ScalarField grad_J(const FunctionalContext& ctx, const ScalarField& u) {
  const double mass = weighted_mass(ctx, u);
  if (mass <= 0.0) throw NonpositiveMassError(mass);
  ScalarField g = laplacian_g(u);
  const double a = kEightPi - ctx.eps;
  for (std::size_t i = 0; i < g.values.size(); ++i)
    g.values[i] = -g.values[i] +
                  a * (1.0 - ctx.h.values[i] * std::exp(u.values[i]) / mass);
  return g;
}

// Shift onto H_1: u - log int h e^u dv_g. Idempotent, leaves J unchanged.
inline ScalarField normalize_H1(const FunctionalContext& ctx, const ScalarField& u) {
  const double mass = weighted_mass(ctx, u);
  if (mass <= 0.0) throw NonpositiveMassError(mass);
  ScalarField out = u;
  const double shift = std::log(mass);
  for (double& v : out.values) v -= shift;
  return out;
}

// L^2(dv_g) norm of Delta_g u - (8pi - eps) + (8pi - eps) h e^u.
// For u in H_1 this is exactly the Euler-Lagrange residual of the equation.
inline double residual_KW(const FunctionalContext& ctx, const ScalarField& u) {
  const ScalarField lap = laplacian_g(u);
  const double a = kEightPi - ctx.eps;
  const auto& e2w = ctx.grid->area_element();
  const double cell = 1.0 / (static_cast<double>(ctx.grid->n()) * ctx.grid->n());
  KahanSum s;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const double res = lap.values[i] - a + a * ctx.h.values[i] * std::exp(u.values[i]);
    s.add(res * res * e2w[i] * cell);
  }
  return std::sqrt(s.value());
}

// Moser-Trudinger diagnostic (log int e^u dv_g - int u dv_g) / (E/16pi).
inline double mt_ratio(const ScalarField& u) {
  const double energy = grad_norm_sq_g(u);
  if (energy < 1e-28) throw ConstantFieldError();
  const auto& e2w = u.grid->area_element();
  const double cell = 1.0 / (static_cast<double>(u.grid->n()) * u.grid->n());
  KahanSum s;
  for (std::size_t i = 0; i < u.values.size(); ++i)
    s.add(std::exp(u.values[i]) * e2w[i] * cell);
  const double num = std::log(s.value()) - integral_g(u);
  return num / (energy / (16.0 * kPi));
}

// int e^u dv_g, for the mass monitors.
inline double exp_integral_g(const ScalarField& u) {
  const auto& e2w = u.grid->area_element();
  const double cell = 1.0 / (static_cast<double>(u.grid->n()) * u.grid->n());
  KahanSum s;
  for (std::size_t i = 0; i < u.values.size(); ++i)
    s.add(std::exp(u.values[i]) * e2w[i] * cell);
  return s.value();
}

}  // namespace kwlab
