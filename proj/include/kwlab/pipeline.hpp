#pragma once

// End-to-end experiment pipeline: thresholds -> continuation -> per-stage
// diagnostics -> upper bound -> summary. All numeric content of the summary
// comes from module operations; the pipeline only assembles and serializes.
// Wall-clock timings go to log.txt, never into summary.json, so identical
// configs and seeds reproduce the summary byte for byte.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <string>
#include <vector>

#include "kwlab/continuation.hpp"
#include "kwlab/fixtures.hpp"
#include "kwlab/io.hpp"
#include "kwlab/testfn.hpp"

namespace kwlab {

struct ExperimentConfig {
  json grid_spec;
  json weight_spec;
  std::uint64_t seed = 0;
  json init_spec = "zero";
  std::vector<double> schedule;
  SolverOptions solver;
  DiagnosticsConfig diagnostics;
  ThresholdOptions thresholds;
  std::vector<double> ub_eps_list = {0.1, 0.05, 0.02, 0.01};
  double ub_R_match = 10.0;
  double ub_margin = 1e-4;
  bool run_upper_bound = true;
  std::filesystem::path outdir;
};

namespace detail {

inline std::vector<double> parse_schedule(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    const std::string prefix = "geometric:";
    if (s.rfind(prefix, 0) == 0) {
      const int k = std::stoi(s.substr(prefix.size()));
      if (k < 1 || k > 64) throw ConfigError("geometric schedule length out of range");
      return geometric_schedule(k);
    }
    throw ConfigError("unknown schedule spec: " + s);
  }
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& v : j) out.push_back(v.get<double>());
    return out;
  }
  throw ConfigError("schedule must be \"geometric:K\" or a list of eps values");
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig cfg;
  if (!j.contains("grid")) throw ConfigError("config needs a grid spec");
  if (!j.contains("weight")) throw ConfigError("config needs a weight spec");
  if (!j.contains("out")) throw ConfigError("config needs an output directory");
  cfg.grid_spec = j.at("grid");
  cfg.weight_spec = j.at("weight");
  cfg.outdir = j.at("out").get<std::string>();
  cfg.seed = j.value("seed", 0ull);
  cfg.init_spec = j.value("init", json("zero"));
  cfg.schedule = detail::parse_schedule(j.value("schedule", json("geometric:12")));
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    cfg.solver.tol = s.value("tol", cfg.solver.tol);
    cfg.solver.max_iters = s.value("max_iters", cfg.solver.max_iters);
    cfg.solver.lbfgs_memory = s.value("lbfgs_memory", cfg.solver.lbfgs_memory);
    cfg.solver.mass_floor = s.value("mass_floor", cfg.solver.mass_floor);
  }
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    cfg.diagnostics.r_c = d.value("r_c", cfg.diagnostics.r_c);
    cfg.diagnostics.delta = d.value("delta", cfg.diagnostics.delta);
    cfg.diagnostics.R = d.value("R", cfg.diagnostics.R);
    cfg.diagnostics.lambda_cap = d.value("lambda_cap", cfg.diagnostics.lambda_cap);
    cfg.diagnostics.validate();
  }
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    cfg.thresholds.lattice = t.value("lattice", cfg.thresholds.lattice);
    cfg.thresholds.fit_r1 = t.value("fit_r1", cfg.thresholds.fit_r1);
    cfg.thresholds.fit_r2 = t.value("fit_r2", cfg.thresholds.fit_r2);
    cfg.thresholds.refine = t.value("refine", cfg.thresholds.refine);
    cfg.thresholds.margin = t.value("margin", cfg.thresholds.margin);
  }
  if (j.contains("upperbound")) {
    const auto& u = j.at("upperbound");
    if (u.contains("eps_list")) {
      cfg.ub_eps_list.clear();
      for (const auto& v : u.at("eps_list")) cfg.ub_eps_list.push_back(v.get<double>());
    }
    cfg.ub_R_match = u.value("R_match", cfg.ub_R_match);
    cfg.ub_margin = u.value("margin", cfg.ub_margin);
    cfg.run_upper_bound = u.value("enabled", true);
  }
  return cfg;
}

inline ScalarField build_weight(const ExperimentConfig& cfg, GridPtr grid) {
  const auto& w = cfg.weight_spec;
  if (w.contains("fixture")) return weight_fixture(w.at("fixture").get<std::string>(), grid);
  if (w.contains("fourier"))
    return ScalarField(grid, fourier_field(grid->n(), w.at("fourier")));
  if (w.contains("file")) {
    return bind_field(grid, read_field_bin(w.at("file").get<std::string>()));
  }
  throw ConfigError("weight spec needs one of: fixture, fourier, file");
}

inline ScalarField build_init(const ExperimentConfig& cfg, GridPtr grid,
                              const ScalarField& h) {
  const auto& spec = cfg.init_spec;
  if (spec.is_string() && spec == "zero") return ScalarField(grid);
  if (spec.is_object() && spec.contains("random")) {
    const auto& r = spec.at("random");
    return random_band_limited(grid, cfg.seed, r.value("kmax", 3),
                               r.value("amplitude", 0.3));
  }
  if (spec.is_object() && spec.contains("bump")) {
    const auto& b = spec.at("bump");
    const Node center = h.argmax();
    return bump_init(grid, center, b.value("amplitude", 5.0), b.value("radius", 0.2));
  }
  throw ConfigError("init spec must be \"zero\", {\"random\":...} or {\"bump\":...}");
}

struct PipelineResult {
  int exit_code = 0;
  json summary;
  std::filesystem::path outdir;
};

inline PipelineResult run_pipeline(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;
  fs::create_directories(cfg.outdir);
  fs::create_directories(cfg.outdir / "trajectory");
  fs::create_directories(cfg.outdir / "reports");
  std::ofstream log(cfg.outdir / "log.txt");

  PipelineResult result;
  result.outdir = cfg.outdir;
  json summary;
  summary["seed"] = cfg.seed;
  summary["schedule_stages"] = cfg.schedule.size();

  const auto t_start = clock::now();
  auto elapsed_ms = [&](clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - t0).count();
  };

  try {
    GridPtr grid = parse_grid_spec(cfg.grid_spec);
    ScalarField h = build_weight(cfg, grid);
    FunctionalContext ctx(grid, h, 0.0);
    summary["grid_N"] = grid->n();

    ContinuationOptions copts;
    copts.solver = cfg.solver;
    copts.diagnostics = cfg.diagnostics;
    copts.thresholds = cfg.thresholds;

    const ScalarField init = build_init(cfg, grid, h);

    auto t0 = clock::now();
    const Trajectory traj = continue_to_zero(ctx, cfg.schedule, init, copts);
    log << "continuation: " << elapsed_ms(t0) << " ms, " << traj.stages.size()
        << " stages\n";

    if (traj.thresholds) {
      json tj = to_json(*traj.thresholds, *grid);
      json landscape = json::array();
      for (const auto& pt : traj.thresholds->landscape)
        landscape.push_back(json{{"ix", pt.p.ix},
                                 {"iy", pt.p.iy},
                                 {"A", pt.robin_A},
                                 {"value", std::isfinite(pt.value) ? json(pt.value)
                                                                   : json(nullptr)}});
      tj["landscape"] = landscape;
      write_json(cfg.outdir / "thresholds.json", tj);
    }

    // per-stage artifacts + run-level CSV
    std::ofstream csv(cfg.outdir / "run.csv");
    csv << "eps,J,lambda,grad_l2,ubar,mass,iters\n";
    csv << std::setprecision(17);
    for (std::size_t k = 0; k < traj.stages.size(); ++k) {
      const auto& st = traj.stages[k];
      const std::string tag = "stage_" + std::to_string(k);
      json sj = to_json(st.state);
      sj["residual_KW"] = st.residual;
      sj["blowup_flag"] = st.blowup_flag;
      sj["lambda_plus_ubar"] = st.lambda_plus_ubar;
      sj["lambda_plus_2ubar"] = st.lambda_plus_2ubar;
      sj["field"] = tag + "_u.bin";
      write_json(cfg.outdir / "trajectory" / (tag + ".json"), sj);
      write_field_bin(cfg.outdir / "trajectory" / (tag + "_u.bin"), st.state.u);
      write_json(cfg.outdir / "reports" / (tag + ".json"), to_json(st.report, *grid));
      const double ubar = integral_g(st.state.u) - std::log(st.state.mass);
      csv << st.eps << ',' << st.state.J_value << ',' << st.report.lambda << ','
          << std::sqrt(st.report.grad_energy) << ',' << ubar << ',' << st.state.mass
          << ',' << st.state.iters << "\n";
    }
    csv.close();

    const auto& last = traj.stages.back();
    summary["status"] =
        traj.status == TrajectoryStatus::Completed ? "completed" : "blowup";
    summary["converged"] = traj.status == TrajectoryStatus::Completed &&
                           last.state.status == SolverStatus::Converged;
    summary["residual"] = last.residual;
    summary["J_final"] = last.state.J_value;
    summary["lambda_final"] = last.report.lambda;
    summary["lambda_max"] = [&] {
      double m = traj.stages.front().report.lambda;
      for (const auto& st : traj.stages) m = std::max(m, st.report.lambda);
      return m;
    }();
    summary["stages_run"] = traj.stages.size();
    summary["coherence"] = json{{"lambda_range", traj.coherence.lambda_range},
                                {"corr_lambda_energy", traj.coherence.corr_lambda_energy},
                                {"corr_lambda_negubar", traj.coherence.corr_lambda_negubar},
                                {"corr_energy_negubar", traj.coherence.corr_energy_negubar}};
    if (traj.thresholds) {
      summary["djlw_satisfied"] = traj.thresholds->djlw_satisfied;
      summary["djlw_value"] = traj.thresholds->djlw_value;
      summary["C0"] = traj.thresholds->C0;
    }

    if (cfg.run_upper_bound && traj.thresholds) {
      auto t1 = clock::now();
      auto green_p0 = fit_robin(solve_green(grid, traj.thresholds->argmax_p0),
                                cfg.thresholds.fit_r1, cfg.thresholds.fit_r2);
      const auto family =
          build_test_family(ctx, green_p0, cfg.ub_eps_list, cfg.ub_R_match,
                            traj.thresholds->C0, traj.thresholds->djlw_value);
      const auto ub = verify_upper_bound(family, cfg.ub_margin);
      json ubj = to_json(family, *grid);
      ubj["result"] = to_json(ub);
      write_json(cfg.outdir / "upperbound.json", ubj);
      summary["upper_bound_passed"] = ub.passed;
      summary["upper_bound_min_J"] = ub.min_J;
      log << "upper bound: " << elapsed_ms(t1) << " ms\n";
    }
  } catch (const Error& e) {
    summary["error"] = e.what();
    result.exit_code = 1;
  } catch (const std::exception& e) {
    summary["error"] = e.what();
    result.exit_code = 1;
  }

  log << "total: " << elapsed_ms(t_start) << " ms\n";
  write_json(cfg.outdir / "summary.json", summary);
  result.summary = summary;
  return result;
}

// ---- plot data -------------------------------------------------------------

// Emits five CSVs under <dir>/plots: the trajectory curves, the radial
// profile of the last stage against phi0, the energy decomposition stack,
// the A + 2 log h landscape, and the per-stage lemma monitors.
inline void emit_plot_data(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir / "summary.json") || !fs::exists(dir / "run.csv"))
    throw MissingArtifactsError("no completed run in " + dir.string());
  fs::create_directories(dir / "plots");

  // trajectory.csv: first five columns of run.csv
  {
    std::ifstream in(dir / "run.csv");
    std::ofstream out(dir / "plots" / "trajectory.csv");
    out << "eps,J,lambda,grad_l2,ubar\n";
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      std::size_t cut = line.size();
      int commas = 0;
      for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == ',' && ++commas == 5) {
          cut = i;
          break;
        }
      }
      out << line.substr(0, cut) << "\n";
    }
  }

  // count stages
  int stages = 0;
  while (fs::exists(dir / "trajectory" / ("stage_" + std::to_string(stages) + ".json")))
    ++stages;
  if (stages == 0) throw MissingArtifactsError("no stages in " + dir.string());
  const std::string last = "stage_" + std::to_string(stages - 1);

  // radial profile of the last stage vs phi0
  {
    const json st = read_json(dir / "trajectory" / (last + ".json"));
    const json rep = read_json(dir / "reports" / (last + ".json"));
    const auto raw = read_field_bin(dir / "trajectory" / (last + "_u.bin"));
    GridPtr grid = make_flat_grid(raw.n);  // radii only need the flat wrap metric
    ScalarField u = bind_field(grid, raw);
    const double mass = st.at("mass").get<double>();
    const double lambda = rep.at("lambda").get<double>();
    const double hp = rep.at("h_at_peak").get<double>();
    const Node peak{rep.at("peak").at("ix").get<int>(), rep.at("peak").at("iy").get<int>()};
    const double r = std::exp(-0.5 * lambda);
    const double window = std::min(0.2, 10.0 * r);
    std::vector<std::pair<double, double>> rows;  // rescaled radius, u_rescaled
    const int n = grid->n();
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double d = grid->flat_distance(peak, Node{ix, iy});
        if (d > window) continue;
        rows.emplace_back(d / r, u.at(ix, iy) - std::log(mass) - lambda);
      }
    std::sort(rows.begin(), rows.end());
    if (rows.size() > 2000) rows.resize(2000);
    std::ofstream out(dir / "plots" / "profile.csv");
    out << "radius,u_rescaled,phi0,difference\n";
    out << std::setprecision(17);
    for (const auto& [rad, val] : rows) {
      const double phi0 = hp > 0 ? -2.0 * std::log1p(kPi * hp * rad * rad)
                                 : std::numeric_limits<double>::quiet_NaN();
      out << rad << ',' << val << ',' << phi0 << ',' << (val - phi0) << "\n";
    }
  }

  // energy decomposition stack
  {
    std::ofstream out(dir / "plots" / "energy.csv");
    out << "eps,inner,neck,outer,total\n";
    out << std::setprecision(17);
    for (int k = 0; k < stages; ++k) {
      const json rep = read_json(dir / "reports" / ("stage_" + std::to_string(k) + ".json"));
      auto num = [&](const char* key) {
        return rep.at(key).is_null() ? std::numeric_limits<double>::quiet_NaN()
                                     : rep.at(key).get<double>();
      };
      const json st = read_json(dir / "trajectory" / ("stage_" + std::to_string(k) + ".json"));
      out << st.at("eps").get<double>() << ',' << num("energy_inner") << ','
          << num("energy_neck") << ',' << num("energy_outer") << ','
          << rep.at("grad_energy").get<double>() << "\n";
    }
  }

  // A + 2 log h landscape
  {
    std::ofstream out(dir / "plots" / "landscape.csv");
    out << "ix,iy,A,value\n";
    out << std::setprecision(17);
    if (fs::exists(dir / "thresholds.json")) {
      const json tj = read_json(dir / "thresholds.json");
      for (const auto& pt : tj.at("landscape")) {
        out << pt.at("ix").get<int>() << ',' << pt.at("iy").get<int>() << ','
            << pt.at("A").get<double>() << ',';
        if (pt.at("value").is_null())
          out << "\n";
        else
          out << pt.at("value").get<double>() << "\n";
      }
    }
  }

  // per-stage lemma monitors
  {
    std::ofstream out(dir / "plots" / "monitors.csv");
    out << "eps,lambda_plus_ubar,lambda_plus_2ubar,residual\n";
    out << std::setprecision(17);
    for (int k = 0; k < stages; ++k) {
      const json st = read_json(dir / "trajectory" / ("stage_" + std::to_string(k) + ".json"));
      out << st.at("eps").get<double>() << ',' << st.at("lambda_plus_ubar").get<double>()
          << ',' << st.at("lambda_plus_2ubar").get<double>() << ','
          << st.at("residual_KW").get<double>() << "\n";
    }
  }
}

}  // namespace kwlab
