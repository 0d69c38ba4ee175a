#pragma once

// Blow-up diagnostics: concentration sets, bubble rescaling, Green-limit
// comparison, the neck maximum-principle barrier, the energy decomposition
// over bubble / neck / far regions, and a synthetic glued-family generator.
//
// Genuine blow-up cannot be driven to lambda -> infinity on a fixed grid, so
// the generator is the verification backbone: it builds fields with known
// ground truth (inner bubble, outer Green tail, smooth blend) against which
// every diagnostic here is validated.
//
// Distances are measured with the local conformal approximation
// s_g = e^{w(center)} |x - center|_periodic throughout, consistently between
// the ball sums, the rings, and the rescaled sampling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kwlab/bubble.hpp"
#include "kwlab/calculus.hpp"
#include "kwlab/errors.hpp"
#include "kwlab/functional.hpp"
#include "kwlab/greens.hpp"

namespace kwlab {

struct DiagnosticsConfig {
  double r_c = 0.05;       // concentration ball radius
  double threshold = 0.5;  // concentration mass threshold (Eq.-(10) value)
  double gamma = 0.1;      // margin in the 1/2 - gamma small-mass regime
  double delta = 0.1;      // neck outer radius
  double R = 10.0;         // neck inner radius multiplier (inner edge R*r)
  double lambda_cap = 14.0;
  double blend_frac = 0.4;   // glue ramp occupies [Rr, Rr + frac*(delta-Rr)] capped at 2Rr
  double chart_radius = 0.25;

  void validate() const {
    if (!(0.0 < r_c && r_c < delta && delta < 0.25))
      throw std::invalid_argument("need 0 < r_c < delta < 1/4");
    if (R < 1.0) throw std::invalid_argument("need R >= 1");
    if (!(gamma > 0.0 && gamma < 0.5)) throw std::invalid_argument("gamma in (0, 1/2)");
  }
};

namespace detail {

// Conformal distance field from `center`, s_g = e^{w(center)} * flat wrap.
inline double conformal_dist(const SurfaceGrid& grid, Node center, int ix, int iy,
                             double scale) {
  const double dx = wrap_delta(grid.x_of(ix) - grid.x_of(center.ix));
  const double dy = wrap_delta(grid.y_of(iy) - grid.y_of(center.iy));
  return scale * std::hypot(dx, dy);
}

template <typename Fn>
void for_nodes_within(const SurfaceGrid& grid, Node center, double radius, Fn&& fn) {
  const int n = grid.n();
  const double scale = std::exp(grid.w_at(center));
  const double flat_r = radius / scale;
  const int span = std::min(n / 2, static_cast<int>(std::ceil(flat_r * n)) + 1);
  for (int dy = -span; dy <= span; ++dy) {
    const int iy = ((center.iy + dy) % n + n) % n;
    for (int dx = -span; dx <= span; ++dx) {
      const int ix = ((center.ix + dx) % n + n) % n;
      const double s = conformal_dist(grid, center, ix, iy, scale);
      if (s <= radius) fn(ix, iy, s);
    }
  }
}

}  // namespace detail

// int_{B_radius(center)} |h| e^u dv_g for u in the H_1 gauge.
inline double local_mass(const FunctionalContext& ctx, const ScalarField& u_h1,
                         Node center, double radius) {
  const auto& grid = *ctx.grid;
  const double cell = 1.0 / (static_cast<double>(grid.n()) * grid.n());
  const auto& e2w = grid.area_element();
  KahanSum s;
  detail::for_nodes_within(grid, center, radius, [&](int ix, int iy, double) {
    const auto i = grid.idx(ix, iy);
    s.add(std::abs(ctx.h.values[i]) * std::exp(u_h1.values[i]) * e2w[i] * cell);
  });
  return s.value();
}

// Ball masses on the detection lattice (spacing ~ r_c / 4), shared by the
// concentration set and the solver's stop criterion so the two always agree.
inline std::vector<std::pair<Node, double>> local_mass_lattice(
    const FunctionalContext& ctx, const ScalarField& u_h1, const DiagnosticsConfig& cfg) {
  cfg.validate();
  const int n = ctx.grid->n();
  const int stride = std::max(1, static_cast<int>(std::floor(n * cfg.r_c / 4.0)));
  std::vector<std::pair<Node, double>> out;
  for (int iy = 0; iy < n; iy += stride)
    for (int ix = 0; ix < n; ix += stride) {
      const Node p{ix, iy};
      out.emplace_back(p, local_mass(ctx, u_h1, p, cfg.r_c));
    }
  return out;
}

inline double local_mass_lattice_max(const FunctionalContext& ctx, const ScalarField& u_h1,
                                     const DiagnosticsConfig& cfg) {
  double best = 0.0;
  for (const auto& [p, m] : local_mass_lattice(ctx, u_h1, cfg)) best = std::max(best, m);
  return best;
}

// Discrete surrogate of the blow-up set: lattice nodes whose r_c-ball carries
// |h| e^u mass >= threshold, merged within distance r_c (highest mass wins,
// then lowest row-major index).
inline std::vector<Node> concentration_set(const FunctionalContext& ctx,
                                           const ScalarField& u_h1,
                                           const DiagnosticsConfig& cfg) {
  auto masses = local_mass_lattice(ctx, u_h1, cfg);
  std::vector<std::pair<Node, double>> hits;
  for (const auto& pm : masses)
    if (pm.second >= cfg.threshold) hits.push_back(pm);
  std::sort(hits.begin(), hits.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return ctx.grid->idx(a.first) < ctx.grid->idx(b.first);
  });
  std::vector<Node> kept;
  for (const auto& [p, m] : hits) {
    bool merged = false;
    for (const Node& q : kept) {
      const double scale = std::exp(ctx.grid->w_at(q));
      if (detail::conformal_dist(*ctx.grid, q, p.ix, p.iy, scale) <= cfg.r_c) {
        merged = true;
        break;
      }
    }
    if (!merged) kept.push_back(p);
  }
  return kept;
}

// RMS of u(x* + r x) - lambda against phi0(x) over grid nodes in the window
// |x| <= R (rescaled coordinates x = e^{w(x*)} wrap(y - x*) / r). Nodes are
// sampled exactly, so the number reflects field-vs-profile error, not
// interpolation.
inline double rescale_fit_bubble(const ScalarField& u, Node peak, double lambda, double hp,
                                 double R, double chart_radius = 0.25) {
  const double r = std::exp(-0.5 * lambda);
  const double window = r * R;
  if (window >= chart_radius)
    throw WindowTooLargeError("rescaled window r*R = " + std::to_string(window) +
                              " reaches the chart radius " + std::to_string(chart_radius));
  const auto& grid = *u.grid;
  KahanSum ss;
  std::size_t count = 0;
  detail::for_nodes_within(grid, peak, window, [&](int ix, int iy, double s) {
    const double diff = u.at(ix, iy) - lambda - bubble_value_radial(hp, s / r);
    ss.add(diff * diff);
    ++count;
  });
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(ss.value() / static_cast<double>(count));
}

// RMS of (u - ubar) - G_p over nodes farther than exclusion_radius from the
// pole; the Green-limit comparison of the far field.
inline double green_limit_fit(const ScalarField& u_h1, const GreenData& green,
                              double exclusion_radius) {
  const auto& grid = *u_h1.grid;
  const double ubar = integral_g(u_h1);
  const double scale = std::exp(grid.w_at(green.pole));
  const int n = grid.n();
  KahanSum ss;
  std::size_t count = 0;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      if (detail::conformal_dist(grid, green.pole, ix, iy, scale) <= exclusion_radius)
        continue;
      const double diff = u_h1.at(ix, iy) - ubar - green.G.at(ix, iy);
      ss.add(diff * diff);
      ++count;
    }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(ss.value() / static_cast<double>(count));
}

enum class BarrierStatus { Ok, PositivityViolated };

struct NeckBarrierResult {
  BarrierStatus status = BarrierStatus::Ok;
  double margin = std::numeric_limits<double>::quiet_NaN();
  double C4 = std::numeric_limits<double>::quiet_NaN();
};

// Maximum-principle barrier on the neck B_delta \ B_{Rr}: empirically
// C4 = max over the two boundary rings of (G - lambda - u), then
// margin = min over the neck of u - (G - lambda - C4). A comparison field
// satisfying the PDE sign structure keeps margin >= -tol; the check requires
// h > 0 on the whole chart ball and reports (rather than asserts) when that
// hypothesis fails.
inline NeckBarrierResult neck_barrier_check(const FunctionalContext& ctx,
                                            const ScalarField& u, const GreenData& green,
                                            double lambda, const DiagnosticsConfig& cfg) {
  cfg.validate();
  const auto& grid = *ctx.grid;
  const Node peak = green.pole;
  const double r = std::exp(-0.5 * lambda);
  const double rho = r * cfg.R;
  if (rho >= cfg.delta)
    throw NeckEmptyError("R*r = " + std::to_string(rho) + " >= delta = " +
                         std::to_string(cfg.delta));

  NeckBarrierResult res;
  bool positive = true;
  detail::for_nodes_within(grid, peak, cfg.delta, [&](int ix, int iy, double) {
    if (ctx.h.at(ix, iy) <= 0.0) positive = false;
  });
  if (!positive) {
    res.status = BarrierStatus::PositivityViolated;
    return res;
  }

  const double ring_w = 1.5 * std::exp(grid.w_at(peak)) / grid.n();
  double c4 = -std::numeric_limits<double>::infinity();
  bool ring_inner = false, ring_outer = false;
  detail::for_nodes_within(grid, peak, cfg.delta + ring_w, [&](int ix, int iy, double s) {
    const bool on_inner = std::abs(s - rho) <= ring_w;
    const bool on_outer = std::abs(s - cfg.delta) <= ring_w;
    if (!on_inner && !on_outer) return;
    ring_inner |= on_inner;
    ring_outer |= on_outer;
    c4 = std::max(c4, green.G.at(ix, iy) - lambda - u.at(ix, iy));
  });
  if (!ring_inner || !ring_outer)
    throw NeckEmptyError("boundary rings hold no nodes at this resolution");

  double margin = std::numeric_limits<double>::infinity();
  detail::for_nodes_within(grid, peak, cfg.delta, [&](int ix, int iy, double s) {
    if (s <= rho) return;
    margin = std::min(margin, u.at(ix, iy) - (green.G.at(ix, iy) - lambda - c4));
  });
  res.margin = margin;
  res.C4 = c4;
  return res;
}

struct EnergySplit {
  double inner = 0, neck = 0, outer = 0;
  double total() const { return inner + neck + outer; }
};

// Exact partition of the Dirichlet energy over B_{Rr} / neck / far region.
// The pointwise density |grad_flat u|^2 integrates against dx (conformal
// invariance), so the three pieces sum to grad_norm_sq_g(u) to rounding.
inline EnergySplit energy_decomposition(const ScalarField& u, Node peak, double lambda,
                                        const DiagnosticsConfig& cfg) {
  cfg.validate();
  const double rho = std::exp(-0.5 * lambda) * cfg.R;
  if (rho >= cfg.delta)
    throw NeckEmptyError("R*r = " + std::to_string(rho) + " >= delta = " +
                         std::to_string(cfg.delta));
  const auto& grid = *u.grid;
  const int n = grid.n();
  auto [gx, gy] = gradient_flat(u);
  const double cell = 1.0 / (static_cast<double>(n) * n);
  const double scale = std::exp(grid.w_at(peak));
  KahanSum inner, neck, outer;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const auto i = grid.idx(ix, iy);
      const double e = (gx.values[i] * gx.values[i] + gy.values[i] * gy.values[i]) * cell;
      const double s = detail::conformal_dist(grid, peak, ix, iy, scale);
      if (s <= rho)
        inner.add(e);
      else if (s <= cfg.delta)
        neck.add(e);
      else
        outer.add(e);
    }
  return {inner.value(), neck.value(), outer.value()};
}

inline double lower_bound_gap(double J_value, double C0) { return J_value - C0; }

// Glued family: inner bubble lambda + phi0((x-p)/r) on B_{Rr}, outer
// G_p - lambda - c_match with c_match = 2 log((1 + pi hp R^2)/R^2) + A_p
// (continuity of the closed forms at |x-p| = Rr), blended smoothly over an
// annulus that never leaves the chart. Needs a fitted GreenData for A_p.
inline ScalarField synthesize_family(GridPtr grid, const GreenData& green, double hp,
                                     double lambda, const DiagnosticsConfig& cfg) {
  cfg.validate();
  if (!green.fitted())
    throw std::invalid_argument("synthesize_family needs fit_robin output (A_p)");
  if (hp <= 0) throw NonpositiveWeightError("bubble needs h(p) > 0");
  const double r = std::exp(-0.5 * lambda);
  const double rho = r * cfg.R;
  if (rho >= cfg.delta)
    throw WindowTooLargeError("R*r = " + std::to_string(rho) + " >= delta = " +
                              std::to_string(cfg.delta));
  const double blend_lo = rho;
  const double blend_hi = rho + std::min(rho, cfg.blend_frac * (cfg.delta - rho));
  const double c_match =
      2.0 * std::log((1.0 + kPi * hp * cfg.R * cfg.R) / (cfg.R * cfg.R)) + green.robin_A;

  const Node p = green.pole;
  const auto& g = *grid;
  const double scale = std::exp(g.w_at(p));
  ScalarField u(grid);
  for (int iy = 0; iy < g.n(); ++iy)
    for (int ix = 0; ix < g.n(); ++ix) {
      const double s = detail::conformal_dist(g, p, ix, iy, scale);
      const auto i = g.idx(ix, iy);
      const double outer_v = green.G.values[i] - lambda - c_match;
      if (s >= blend_hi) {
        u.values[i] = outer_v;
        continue;
      }
      const double inner_v = lambda + bubble_value_radial(hp, s / r);
      if (s <= blend_lo) {
        u.values[i] = inner_v;
      } else {
        double t = (s - blend_lo) / (blend_hi - blend_lo);
        t = t * t * t * (t * (6.0 * t - 15.0) + 10.0);  // C2 smootherstep
        u.values[i] = (1.0 - t) * inner_v + t * outer_v;
      }
    }
  return u;
}

struct BlowupReport {
  double lambda = 0;
  Node peak;
  double scale_r = 0;           // e^{-lambda/2}
  std::vector<Node> concentration;
  double h_at_peak = 0;
  double profile_fit_rms = std::numeric_limits<double>::quiet_NaN();
  double green_fit_rms = std::numeric_limits<double>::quiet_NaN();
  BarrierStatus barrier_status = BarrierStatus::Ok;
  double barrier_margin = std::numeric_limits<double>::quiet_NaN();
  double barrier_C4 = std::numeric_limits<double>::quiet_NaN();
  double energy_inner = std::numeric_limits<double>::quiet_NaN();
  double energy_neck = std::numeric_limits<double>::quiet_NaN();
  double energy_outer = std::numeric_limits<double>::quiet_NaN();
  double grad_energy = 0;       // total Dirichlet energy
  double J_value = 0;           // J at eps = 0 (the unperturbed functional)
  double C0 = std::numeric_limits<double>::quiet_NaN();
  double J_minus_C0 = std::numeric_limits<double>::quiet_NaN();
};

// Assemble the full diagnostic record for a field. `green` must be solved at
// the field's peak (callers that already know the peak pass a matching
// GreenData). Diagnostics whose geometric preconditions fail (window or neck
// too large for this lambda) are reported as NaN rather than errors: a
// perfectly smooth solution simply has no bubble window.
inline BlowupReport build_blowup_report(const FunctionalContext& ctx, const ScalarField& u,
                                        const GreenData& green, const DiagnosticsConfig& cfg,
                                        std::optional<double> C0 = std::nullopt) {
  cfg.validate();
  const ScalarField u_h1 = normalize_H1(ctx, u);
  BlowupReport rep;
  rep.peak = u_h1.argmax();
  rep.lambda = u_h1.at(rep.peak);
  rep.scale_r = std::exp(-0.5 * rep.lambda);
  rep.concentration = concentration_set(ctx, u_h1, cfg);
  rep.h_at_peak = ctx.h.at(rep.peak);
  rep.grad_energy = grad_norm_sq_g(u_h1);
  const double hp = rep.h_at_peak;
  if (hp > 0) {
    try {
      rep.profile_fit_rms =
          rescale_fit_bubble(u_h1, rep.peak, rep.lambda, hp, cfg.R, cfg.chart_radius);
    } catch (const WindowTooLargeError&) {
    }
  }
  rep.green_fit_rms = green_limit_fit(u_h1, green, cfg.delta);
  try {
    const auto barrier = neck_barrier_check(ctx, u_h1, green, rep.lambda, cfg);
    rep.barrier_status = barrier.status;
    rep.barrier_margin = barrier.margin;
    rep.barrier_C4 = barrier.C4;
  } catch (const NeckEmptyError&) {
  }
  try {
    const auto split = energy_decomposition(u_h1, rep.peak, rep.lambda, cfg);
    rep.energy_inner = split.inner;
    rep.energy_neck = split.neck;
    rep.energy_outer = split.outer;
  } catch (const NeckEmptyError&) {
  }
  rep.J_value = eval_J(ctx.with_eps(0.0), u_h1);
  if (C0) {
    rep.C0 = *C0;
    rep.J_minus_C0 = lower_bound_gap(rep.J_value, *C0);
  }
  return rep;
}

}  // namespace kwlab
