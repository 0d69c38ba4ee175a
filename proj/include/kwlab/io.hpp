#pragma once

// On-disk formats:
//  - fields: row-major float64 binary with an 8-byte little-endian header
//    holding N, plus a JSON sidecar <path>.json with {"N":..,"kind":..}.
//  - grids: JSON {"N": int, "w": "zero" | [{kx,ky,re,im}, ...]}, each Fourier
//    entry contributing re*cos(2pi k.x) - im*sin(2pi k.x).
//  - reports: flat JSON, field names matching the in-memory structs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kwlab/blowup.hpp"
#include "kwlab/continuation.hpp"
#include "kwlab/errors.hpp"
#include "kwlab/grid.hpp"
#include "kwlab/greens.hpp"
#include "kwlab/solver.hpp"
#include "kwlab/testfn.hpp"
#include "kwlab/thresholds.hpp"

namespace kwlab {

using json = nlohmann::json;

inline void write_field_bin(const std::filesystem::path& path, const ScalarField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::uint64_t n = static_cast<std::uint64_t>(f.n());
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!out) throw IoError("short write to " + path.string());
  json sidecar = {{"N", f.n()}, {"kind", "scalar_field"}, {"layout", "row-major float64"}};
  std::ofstream side(path.string() + ".json");
  side << sidecar.dump(2) << "\n";
}

struct RawField {
  int n = 0;
  std::vector<double> values;
};

inline RawField read_field_bin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  if (!in || n == 0 || n > (1u << 16))
    throw IoError("bad field header in " + path.string());
  RawField raw;
  raw.n = static_cast<int>(n);
  raw.values.resize(n * n);
  in.read(reinterpret_cast<char*>(raw.values.data()),
          static_cast<std::streamsize>(raw.values.size() * sizeof(double)));
  if (!in) throw IoError("truncated field data in " + path.string());
  return raw;
}

inline ScalarField bind_field(GridPtr grid, RawField raw) {
  if (raw.n != grid->n()) throw IoError("field resolution does not match grid");
  return ScalarField(std::move(grid), std::move(raw.values));
}

// Build a conformal factor from Fourier coefficients.
inline std::vector<double> fourier_field(int n, const json& coeffs) {
  std::vector<double> w(static_cast<std::size_t>(n) * n, 0.0);
  for (const auto& c : coeffs) {
    const int kx = c.at("kx").get<int>();
    const int ky = c.at("ky").get<int>();
    const double re = c.value("re", 0.0);
    const double im = c.value("im", 0.0);
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const double ph = kTwoPi * (kx * (static_cast<double>(ix) / n) +
                                    ky * (static_cast<double>(iy) / n));
        w[static_cast<std::size_t>(iy) * n + ix] += re * std::cos(ph) - im * std::sin(ph);
      }
  }
  return w;
}

inline GridPtr parse_grid_spec(const json& spec) {
  if (!spec.contains("N")) throw ConfigError("grid spec needs N");
  const int n = spec.at("N").get<int>();
  if (!spec.contains("w") || (spec.at("w").is_string() && spec.at("w") == "zero"))
    return make_flat_grid(n);
  if (!spec.at("w").is_array())
    throw ConfigError("grid spec w must be \"zero\" or a Fourier coefficient list");
  return make_conformal_grid(n, fourier_field(n, spec.at("w")));
}

inline GridPtr load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json spec;
  try {
    in >> spec;
  } catch (const json::exception& e) {
    throw ConfigError("bad grid JSON in " + path.string() + ": " + e.what());
  }
  return parse_grid_spec(spec);
}

// ---- JSON views of the report structs ------------------------------------

inline json to_json(const Node& p, const SurfaceGrid& grid) {
  return json{{"ix", p.ix}, {"iy", p.iy}, {"x", grid.x_of(p.ix)}, {"y", grid.y_of(p.iy)}};
}

inline json nan_safe(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

inline json to_json(const GreenExpansion& e) {
  return json{{"b1", e.b1}, {"b2", e.b2}, {"c1", e.c1}, {"c2", e.c2}, {"c3", e.c3}};
}

inline json to_json(const GreenData& g) {
  json j{{"pole", to_json(g.pole, *g.G.grid)},
         {"robin_A", nan_safe(g.robin_A)},
         {"expansion", to_json(g.expansion)},
         {"fit_residual", nan_safe(g.fit_residual)}};
  if (g.fitted()) {
    j["annulus"] = {g.fit_r1, g.fit_r2};
  }
  return j;
}

inline json to_json(const ThresholdReport& r, const SurfaceGrid& grid) {
  return json{{"C0", r.C0},
              {"argmax_p0", to_json(r.argmax_p0, grid)},
              {"A_p0", r.A_p0},
              {"h_p0", r.h_p0},
              {"djlw_value", r.djlw_value},
              {"djlw_satisfied", r.djlw_satisfied},
              {"margin", r.margin}};
}

inline json to_json(const BlowupReport& r, const SurfaceGrid& grid) {
  json conc = json::array();
  for (const auto& p : r.concentration) conc.push_back(to_json(p, grid));
  return json{{"lambda", r.lambda},
              {"peak", to_json(r.peak, grid)},
              {"scale_r", r.scale_r},
              {"concentration_set", conc},
              {"h_at_peak", r.h_at_peak},
              {"profile_fit_rms", nan_safe(r.profile_fit_rms)},
              {"green_fit_rms", nan_safe(r.green_fit_rms)},
              {"barrier_status", r.barrier_status == BarrierStatus::Ok
                                     ? "ok"
                                     : "positivity_violated"},
              {"barrier_margin", nan_safe(r.barrier_margin)},
              {"barrier_C4", nan_safe(r.barrier_C4)},
              {"energy_inner", nan_safe(r.energy_inner)},
              {"energy_neck", nan_safe(r.energy_neck)},
              {"energy_outer", nan_safe(r.energy_outer)},
              {"grad_energy", r.grad_energy},
              {"J_value", r.J_value},
              {"C0", nan_safe(r.C0)},
              {"J_minus_C0", nan_safe(r.J_minus_C0)}};
}

inline json to_json(const SolverState& st) {
  return json{{"eps", st.eps},
              {"iters", st.iters},
              {"J", st.J_value},
              {"grad_norm", st.grad_norm},
              {"mass", st.mass},
              {"status", to_string(st.status)}};
}

inline json to_json(const UpperBoundResult& r) {
  return json{{"min_J", r.min_J},
              {"eps_star", r.eps_star},
              {"passed", r.passed},
              {"margin", r.margin}};
}

inline json to_json(const TestFamily& fam, const SurfaceGrid& grid) {
  json members = json::array();
  for (const auto& m : fam.members)
    members.push_back(json{{"eps", m.eps},
                           {"R_eff", m.R_eff},
                           {"built", m.built},
                           {"J", nan_safe(m.J)},
                           {"mass", m.mass},
                           {"max_value", m.max_value},
                           {"note", m.note}});
  return json{{"p0", to_json(fam.p0, grid)},
              {"C0", fam.C0},
              {"djlw_value", fam.djlw_value},
              {"members", members}};
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("bad JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace kwlab
