#pragma once

// Continuation eps -> 0 with warm starts. Each stage minimizes J_eps from the
// previous stage's field, attaches a BlowupReport, and feeds the blow-up
// detector (lambda above cap, or local |h|e^u mass over the detection lattice
// reaching 1/2). The trajectory is the object whose boundedness the theory
// talks about: if the minimizers stay bounded they converge to a minimizer of
// J, otherwise the diagnostics watch the concentration develop.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kwlab/blowup.hpp"
#include "kwlab/solver.hpp"
#include "kwlab/thresholds.hpp"

namespace kwlab {

enum class TrajectoryStatus { Completed, Blowup };

struct Stage {
  double eps = 0;
  SolverState state;
  BlowupReport report;
  double residual = 0;        // residual_KW of the H1-normalized field at this eps
  double lambda_plus_ubar = 0;     // lemma monitor: bounded below along trajectories
  double lambda_plus_2ubar = 0;    // lemma monitor: bounded above (alpha = 2)
  bool blowup_flag = false;
};

struct CoherenceStats {
  double lambda_range = 0;
  double corr_lambda_energy = 0;   // rank corr of lambda vs ||grad u||_2
  double corr_lambda_negubar = 0;  // rank corr of lambda vs -ubar
  double corr_energy_negubar = 0;
};

struct Trajectory {
  std::vector<Stage> stages;
  TrajectoryStatus status = TrajectoryStatus::Completed;
  std::optional<ThresholdReport> thresholds;
  CoherenceStats coherence;
};

struct ContinuationOptions {
  SolverOptions solver;
  DiagnosticsConfig diagnostics;
  ThresholdOptions thresholds;
  bool compute_thresholds = true;  // one C0 landscape per trajectory
  bool attach_reports = true;
};

inline std::vector<double> geometric_schedule(int stages, double base = kEightPi,
                                              double factor = 0.5) {
  std::vector<double> eps(static_cast<std::size_t>(stages));
  double v = base;
  for (int k = 0; k < stages; ++k) {
    v *= factor;
    eps[static_cast<std::size_t>(k)] = v;
  }
  return eps;
}

inline CoherenceStats blowup_coherence(const std::vector<Stage>& stages) {
  CoherenceStats cs;
  std::vector<double> lam, energy, negubar;
  for (const auto& st : stages) {
    lam.push_back(st.report.lambda);
    energy.push_back(std::sqrt(st.report.grad_energy));
    negubar.push_back(-(integral_g(st.state.u) - std::log(st.state.mass)));
  }
  if (lam.size() < 2) return cs;
  double lo = lam[0], hi = lam[0];
  for (double v : lam) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  cs.lambda_range = hi - lo;
  cs.corr_lambda_energy = spearman_rank_correlation(lam, energy);
  cs.corr_lambda_negubar = spearman_rank_correlation(lam, negubar);
  cs.corr_energy_negubar = spearman_rank_correlation(energy, negubar);
  return cs;
}

// Run the schedule (strictly decreasing, last entry > 0). Terminates early
// with status Blowup when the detector fires; solver errors propagate with
// the stage index attached.
inline Trajectory continue_to_zero(const FunctionalContext& ctx_base,
                                   const std::vector<double>& schedule,
                                   const ScalarField& init,
                                   const ContinuationOptions& opts = {}) {
  if (schedule.empty()) throw InvalidScheduleError("empty schedule");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (schedule[k] <= 0.0 || schedule[k] >= kEightPi)
      throw InvalidScheduleError("stage eps must lie in (0, 8 pi)");
    if (k > 0 && !(schedule[k] < schedule[k - 1]))
      throw InvalidScheduleError("schedule must be strictly decreasing");
  }
  opts.diagnostics.validate();

  Trajectory traj;
  if (opts.compute_thresholds)
    traj.thresholds = compute_thresholds(ctx_base.with_eps(0.0), opts.thresholds);

  ScalarField u = init;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const auto ctx = ctx_base.with_eps(schedule[k]);
    Stage stage;
    stage.eps = schedule[k];
    try {
      stage.state = minimize_at_eps(ctx, u, opts.solver);
    } catch (const Error& e) {
      throw Error("stage " + std::to_string(k) + " (eps = " +
                  std::to_string(schedule[k]) + "): " + e.what());
    }
    u = stage.state.u;

    const ScalarField u_h1 = normalize_H1(ctx, stage.state.u);
    stage.residual = residual_KW(ctx, u_h1);
    const double lambda = u_h1.max();
    const double ubar = integral_g(u_h1);
    stage.lambda_plus_ubar = lambda + ubar;
    stage.lambda_plus_2ubar = lambda + 2.0 * ubar;

    const Node peak = u_h1.argmax();
    if (opts.attach_reports) {
      auto green = solve_green(ctx.grid, peak);
      try {
        green = fit_robin(green, opts.thresholds.fit_r1, opts.thresholds.fit_r2);
      } catch (const Error&) {
        // keep the unfitted Green data; the report only needs the field
      }
      std::optional<double> C0;
      if (traj.thresholds) C0 = traj.thresholds->C0;
      stage.report = build_blowup_report(ctx, stage.state.u, green, opts.diagnostics, C0);
    } else {
      stage.report.lambda = lambda;
      stage.report.peak = peak;
      stage.report.scale_r = std::exp(-0.5 * lambda);
      stage.report.grad_energy = grad_norm_sq_g(u_h1);
      stage.report.h_at_peak = ctx.h.at(peak);
    }

    const double local_mass_max = local_mass_lattice_max(ctx, u_h1, opts.diagnostics);
    stage.blowup_flag = lambda > opts.diagnostics.lambda_cap ||
                        local_mass_max >= opts.diagnostics.threshold;
    traj.stages.push_back(std::move(stage));
    if (traj.stages.back().blowup_flag) {
      traj.status = TrajectoryStatus::Blowup;
      break;
    }
  }
  traj.coherence = blowup_coherence(traj.stages);
  return traj;
}

}  // namespace kwlab
