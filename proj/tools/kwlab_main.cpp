// Command-line front end. Subcommands mirror the pipeline stages:
//   solve       minimize J_eps for one eps
//   continue    continuation eps -> 0 over a schedule
//   green       Green function + Robin fit at a pole
//   thresholds  C0 / DJLW report over a pole lattice
//   analyze     blow-up diagnostics for a stored field
//   synth       glued synthetic blow-up field
//   upperbound  test-function family and the strict upper bound
//   pipeline    full experiment from a JSON config
//   plot-data   CSV extraction from a completed run

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kwlab/kwlab.hpp"

namespace fs = std::filesystem;
using namespace kwlab;

namespace {

GridPtr grid_from_file(const std::string& path) { return load_grid(path); }

ScalarField weight_from_arg(GridPtr grid, const std::string& weight) {
  if (fs::path(weight).extension() == ".bin")
    return bind_field(grid, read_field_bin(weight));
  return weight_fixture(weight, grid);
}

Node parse_node(const std::string& s, const SurfaceGrid& grid) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ConfigError("expected x,y");
  const double x = std::stod(s.substr(0, comma));
  const double y = std::stod(s.substr(comma + 1));
  const int n = grid.n();
  auto to_index = [n](double v) {
    int i = static_cast<int>(std::lround(v * n));
    return ((i % n) + n) % n;
  };
  return Node{to_index(x), to_index(y)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for the Kazdan-Warner equation on the torus"};
  app.require_subcommand(1);

  std::string grid_path, weight_arg, out_path, pole_arg, state_path, green_path;
  std::string config_path, dir_path, schedule_arg = "geometric:12", eps_list_arg;
  double eps = 0.5, tol = 1e-8, r1 = 0.05, r2 = 0.15, lambda = 12.0, R = 10.0;
  double ub_R = 10.0, ub_margin = 1e-4;
  int lattice = 16;
  std::uint64_t seed = 0;
  std::string field_out;

  auto* solve = app.add_subcommand("solve", "minimize J_eps at fixed eps");
  solve->add_option("--grid", grid_path)->required();
  solve->add_option("--weight", weight_arg, "fixture name or .bin field")->required();
  solve->add_option("--eps", eps, "perturbation eps");
  solve->add_option("--tol", tol);
  solve->add_option("--out", out_path)->required();

  auto* cont = app.add_subcommand("continue", "continuation eps -> 0");
  cont->add_option("--grid", grid_path)->required();
  cont->add_option("--weight", weight_arg)->required();
  cont->add_option("--schedule", schedule_arg, "geometric:K or comma list");
  cont->add_option("--tol", tol);
  cont->add_option("--out", dir_path, "trajectory directory")->required();

  auto* green = app.add_subcommand("green", "Green function + Robin constant");
  green->add_option("--grid", grid_path)->required();
  green->add_option("--pole", pole_arg, "x,y in [0,1)^2")->required();
  green->add_option("--annulus", eps_list_arg, "r1,r2 fit annulus");
  green->add_option("--out", out_path)->required();
  green->add_option("--field-out", field_out, "optional binary dump of G");

  auto* thr = app.add_subcommand("thresholds", "C0 and DJLW report");
  thr->add_option("--grid", grid_path)->required();
  thr->add_option("--weight", weight_arg)->required();
  thr->add_option("--lattice", lattice);
  thr->add_option("--out", out_path)->required();

  auto* analyze = app.add_subcommand("analyze", "blow-up diagnostics for a field");
  analyze->add_option("--grid", grid_path)->required();
  analyze->add_option("--weight", weight_arg)->required();
  analyze->add_option("--state", state_path, "field .bin to analyze")->required();
  analyze->add_option("--out", out_path)->required();

  auto* synth = app.add_subcommand("synth", "synthesize a glued blow-up field");
  synth->add_option("--grid", grid_path)->required();
  synth->add_option("--weight", weight_arg)->required();
  synth->add_option("--lambda", lambda);
  synth->add_option("--R", R);
  synth->add_option("--out", out_path, "output .bin")->required();

  auto* ub = app.add_subcommand("upperbound", "test-function upper bound");
  ub->add_option("--grid", grid_path)->required();
  ub->add_option("--weight", weight_arg)->required();
  ub->add_option("--eps-list", eps_list_arg, "comma separated eps values");
  ub->add_option("--R", ub_R);
  ub->add_option("--margin", ub_margin);
  ub->add_option("--out", out_path)->required();

  auto* pipe = app.add_subcommand("pipeline", "full experiment from JSON config");
  pipe->add_option("--config", config_path)->required();
  pipe->add_option("--seed", seed, "override config seed");

  auto* plot = app.add_subcommand("plot-data", "emit plot CSVs from a run");
  plot->add_option("--dir", dir_path, "artifact directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      auto grid = grid_from_file(grid_path);
      FunctionalContext ctx(grid, weight_from_arg(grid, weight_arg), eps);
      SolverOptions opts;
      opts.tol = tol;
      const auto st = minimize_at_eps(ctx, ScalarField(grid), opts);
      json j = to_json(st);
      j["residual_KW"] = residual_KW(ctx, normalize_H1(ctx, st.u));
      j["field"] = out_path + ".u.bin";
      write_field_bin(out_path + ".u.bin", st.u);
      write_json(out_path, j);
      std::cout << j.dump(2) << "\n";
    } else if (*cont) {
      auto grid = grid_from_file(grid_path);
      FunctionalContext ctx(grid, weight_from_arg(grid, weight_arg), 0.0);
      ExperimentConfig cfg;
      cfg.outdir = dir_path;
      cfg.schedule = detail::parse_schedule(json(schedule_arg));
      cfg.solver.tol = tol;
      ContinuationOptions copts;
      copts.solver = cfg.solver;
      const auto traj = continue_to_zero(ctx, cfg.schedule, ScalarField(grid), copts);
      fs::create_directories(fs::path(dir_path) / "trajectory");
      fs::create_directories(fs::path(dir_path) / "reports");
      std::ofstream csv(fs::path(dir_path) / "run.csv");
      csv << "eps,J,lambda,grad_l2,ubar,mass,iters\n" << std::setprecision(17);
      for (std::size_t k = 0; k < traj.stages.size(); ++k) {
        const auto& st = traj.stages[k];
        const std::string tag = "stage_" + std::to_string(k);
        json sj = to_json(st.state);
        sj["residual_KW"] = st.residual;
        sj["blowup_flag"] = st.blowup_flag;
        write_json(fs::path(dir_path) / "trajectory" / (tag + ".json"), sj);
        write_field_bin(fs::path(dir_path) / "trajectory" / (tag + "_u.bin"), st.state.u);
        write_json(fs::path(dir_path) / "reports" / (tag + ".json"),
                   to_json(st.report, *grid));
        csv << st.eps << ',' << st.state.J_value << ',' << st.report.lambda << ','
            << std::sqrt(st.report.grad_energy) << ','
            << (integral_g(st.state.u) - std::log(st.state.mass)) << ',' << st.state.mass
            << ',' << st.state.iters << "\n";
      }
      std::cout << "status: "
                << (traj.status == TrajectoryStatus::Completed ? "completed" : "blowup")
                << ", stages: " << traj.stages.size() << "\n";
    } else if (*green) {
      auto grid = grid_from_file(grid_path);
      const Node pole = parse_node(pole_arg, *grid);
      double fr1 = r1, fr2 = r2;
      if (!eps_list_arg.empty()) {
        const auto comma = eps_list_arg.find(',');
        fr1 = std::stod(eps_list_arg.substr(0, comma));
        fr2 = std::stod(eps_list_arg.substr(comma + 1));
      }
      const auto data = fit_robin(solve_green(grid, pole), fr1, fr2);
      if (!field_out.empty()) write_field_bin(field_out, data.G);
      write_json(out_path, to_json(data));
      std::cout << to_json(data).dump(2) << "\n";
    } else if (*thr) {
      auto grid = grid_from_file(grid_path);
      FunctionalContext ctx(grid, weight_from_arg(grid, weight_arg), 0.0);
      ThresholdOptions topts;
      topts.lattice = lattice;
      const auto report = compute_thresholds(ctx, topts);
      json tj = to_json(report, *grid);
      json landscape = json::array();
      for (const auto& pt : report.landscape)
        landscape.push_back(json{{"ix", pt.p.ix},
                                 {"iy", pt.p.iy},
                                 {"A", pt.robin_A},
                                 {"value", std::isfinite(pt.value) ? json(pt.value)
                                                                   : json(nullptr)}});
      tj["landscape"] = landscape;
      write_json(out_path, tj);
      std::cout << to_json(report, *grid).dump(2) << "\n";
    } else if (*analyze) {
      auto grid = grid_from_file(grid_path);
      FunctionalContext ctx(grid, weight_from_arg(grid, weight_arg), 0.0);
      const ScalarField u = bind_field(grid, read_field_bin(state_path));
      const ScalarField u_h1 = normalize_H1(ctx, u);
      const Node peak = u_h1.argmax();
      auto green_data = solve_green(grid, peak);
      try {
        green_data = fit_robin(green_data, r1, r2);
      } catch (const Error&) {
      }
      DiagnosticsConfig dcfg;
      const auto report = build_blowup_report(ctx, u, green_data, dcfg);
      write_json(out_path, to_json(report, *grid));
      std::cout << to_json(report, *grid).dump(2) << "\n";
    } else if (*synth) {
      auto grid = grid_from_file(grid_path);
      const ScalarField h = weight_from_arg(grid, weight_arg);
      FunctionalContext ctx(grid, h, 0.0);
      const Node peak = h.argmax();
      const auto green_data = fit_robin(solve_green(grid, peak), r1, r2);
      DiagnosticsConfig dcfg;
      dcfg.delta = 0.2;
      dcfg.R = R;
      const auto u = synthesize_family(grid, green_data, h.at(peak), lambda, dcfg);
      write_field_bin(out_path, u);
      std::cout << "synthetic field written to " << out_path << " (max " << u.max()
                << ")\n";
    } else if (*ub) {
      auto grid = grid_from_file(grid_path);
      FunctionalContext ctx(grid, weight_from_arg(grid, weight_arg), 0.0);
      const auto thresholds = compute_thresholds(ctx);
      auto green_p0 = fit_robin(solve_green(grid, thresholds.argmax_p0), r1, r2);
      std::vector<double> eps_values = {0.1, 0.05, 0.02, 0.01};
      if (!eps_list_arg.empty()) {
        eps_values.clear();
        std::string rest = eps_list_arg;
        while (!rest.empty()) {
          const auto comma = rest.find(',');
          eps_values.push_back(std::stod(rest.substr(0, comma)));
          if (comma == std::string::npos) break;
          rest = rest.substr(comma + 1);
        }
      }
      const auto family = build_test_family(ctx, green_p0, eps_values, ub_R,
                                            thresholds.C0, thresholds.djlw_value);
      const auto result = verify_upper_bound(family, ub_margin);
      json j = to_json(family, *grid);
      j["result"] = to_json(result);
      write_json(out_path, j);
      std::cout << j["result"].dump(2) << "\n";
    } else if (*pipe) {
      json config = read_json(config_path);
      if (pipe->count("--seed") > 0) config["seed"] = seed;
      const auto cfg = parse_experiment_config(config);
      const auto result = run_pipeline(cfg);
      std::cout << result.summary.dump(2) << "\n";
      return result.exit_code;
    } else if (*plot) {
      emit_plot_data(dir_path);
      std::cout << "plot CSVs written to " << (fs::path(dir_path) / "plots").string()
                << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
