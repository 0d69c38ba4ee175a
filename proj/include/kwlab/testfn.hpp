#pragma once

// The glued test-function family phi_eps used to verify the strict upper
// bound: inner bubble
//   -2 log(1 + pi h(p0) |x - p0|^2 / eps^2) - 2 log eps        on B_{R eps},
// outer G_{p0} + c_out on the complement, with c_out fixed by continuity of
// the two closed forms at |x - p0| = R eps using the local expansion of G
// (Robin constant plus the radial mean of the quadratic terms). The member
// passes when J(phi~) < C0 - margin; the family records, per member, the
// effective R after clamping the window inside the chart.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kwlab/blowup.hpp"
#include "kwlab/functional.hpp"
#include "kwlab/greens.hpp"

namespace kwlab {

struct TestFunctionPiece {
  double eps = 0;
  double R_eff = 0;        // after clamping R_match * eps inside the chart
  double c_out = 0;        // outer matching constant
  double J = std::numeric_limits<double>::quiet_NaN();
  double mass = 0;
  double max_value = 0;
  bool built = false;
  std::string note;
};

struct TestFamily {
  Node p0;
  double C0 = 0;
  double djlw_value = 0;
  std::vector<double> eps_list;
  std::vector<ScalarField> fields;      // aligned with members where built
  std::vector<TestFunctionPiece> members;
};

struct UpperBoundResult {
  double min_J = std::numeric_limits<double>::infinity();
  double eps_star = 0;
  bool passed = false;
  double margin = 1e-4;
};

// Effective R: the window R*eps must stay well inside the chart.
inline double clamp_R(double R_match, double eps, double chart_radius = 0.25) {
  return std::min(R_match, 0.8 * chart_radius / eps);
}

// Build one member. `green` must be solved at p0 and fitted (A and the
// quadratic coefficients feed the matching constant).
inline ScalarField build_test_function(const FunctionalContext& ctx, const GreenData& green,
                                       double eps, double R_match,
                                       double chart_radius = 0.25) {
  if (!green.fitted())
    throw std::invalid_argument("build_test_function needs fit_robin output");
  const Node p0 = green.pole;
  const double hp = ctx.h.at(p0);
  if (hp <= 0)
    throw NonpositiveWeightError("h(p0) <= 0: the bubble profile needs a positive weight");
  const double R = clamp_R(R_match, eps, chart_radius);
  if (R < 1.0)
    throw ScaleTooLargeError("eps = " + std::to_string(eps) +
                             " leaves no room for the bubble window inside the chart");
  const double rho = R * eps;
  // Continuity at |x - p0| = rho: inner(rho) = -2 log eps - 2 log(1 + pi hp R^2)
  // against G ~ -4 log rho + A + qbar rho^2 with qbar the radial mean of the
  // quadratic expansion terms.
  const double qbar = 0.5 * (green.expansion.c1 + green.expansion.c3);
  const double inner_at_rho = -2.0 * std::log(eps) - 2.0 * std::log1p(kPi * hp * R * R);
  const double green_form_at_rho = -4.0 * std::log(rho) + green.robin_A + qbar * rho * rho;
  const double c_out = inner_at_rho - green_form_at_rho;

  const auto& grid = *ctx.grid;
  const int n = grid.n();
  const double scale = std::exp(grid.w_at(p0));
  ScalarField phi(ctx.grid);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double s = detail::conformal_dist(grid, p0, ix, iy, scale);
      const auto i = grid.idx(ix, iy);
      if (s <= rho) {
        const double t = s / eps;
        phi.values[i] = -2.0 * std::log(eps) - 2.0 * std::log1p(kPi * hp * t * t);
      } else {
        phi.values[i] = green.G.values[i] + c_out;
      }
    }
  const double mass = weighted_mass(ctx, phi);
  if (mass <= 0.0) throw NonpositiveMassError(mass);
  return phi;
}

// Family over an eps list (descending preferred but not required). Members
// whose window cannot fit are recorded as skipped rather than failing the
// whole family.
inline TestFamily build_test_family(const FunctionalContext& ctx, const GreenData& green,
                                    const std::vector<double>& eps_list, double R_match,
                                    double C0, double djlw_value,
                                    double chart_radius = 0.25) {
  TestFamily fam;
  fam.p0 = green.pole;
  fam.C0 = C0;
  fam.djlw_value = djlw_value;
  fam.eps_list = eps_list;
  const auto ctx0 = ctx.with_eps(0.0);
  for (double eps : eps_list) {
    TestFunctionPiece piece;
    piece.eps = eps;
    try {
      piece.R_eff = clamp_R(R_match, eps, chart_radius);
      ScalarField phi = build_test_function(ctx0, green, eps, R_match, chart_radius);
      const ScalarField phi_h1 = normalize_H1(ctx0, phi);
      piece.mass = weighted_mass(ctx0, phi);
      piece.max_value = phi.max();
      piece.J = eval_J(ctx0, phi_h1);  // equals eval_J(ctx0, phi) by gauge invariance
      piece.built = true;
      fam.fields.push_back(std::move(phi));
    } catch (const Error& e) {
      piece.note = e.what();
      fam.fields.emplace_back();
    }
    fam.members.push_back(std::move(piece));
  }
  return fam;
}

// passed = true iff some member attains J < C0 - margin. When the DJLW value
// at p0 is positive the bound must eventually pass; when it is negative the
// result is informational (the theory makes no claim).
inline UpperBoundResult verify_upper_bound(const TestFamily& fam, double margin = 1e-4) {
  UpperBoundResult res;
  res.margin = margin;
  for (const auto& piece : fam.members) {
    if (!piece.built) continue;
    if (piece.J < res.min_J) {
      res.min_J = piece.J;
      res.eps_star = piece.eps;
    }
  }
  res.passed = res.min_J < fam.C0 - margin;
  return res;
}

}  // namespace kwlab
