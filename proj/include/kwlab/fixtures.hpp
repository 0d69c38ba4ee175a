#pragma once

// Named weight fixtures used by tests and experiment configs. DJLW status is
// documented per fixture (value of Delta log h + 8 pi - 2 K at the argmax of
// A_p + 2 log h over {h > 0} on the flat torus).

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kwlab/errors.hpp"
#include "kwlab/grid.hpp"
#include "kwlab/util.hpp"

namespace kwlab {

struct FixtureInfo {
  std::string name;
  std::string description;
  bool sign_changing;
  bool djlw_positive;
  // Analytic DJLW value at the argmax on the flat torus, where closed-form.
  double djlw_value_flat;
};

inline const std::vector<FixtureInfo>& weight_fixtures() {
  // constant:      h = 1                                   DJLW = 8 pi
  // single-bump:   h = 1 + 0.25 cos(2 pi x) cos(2 pi y)    DJLW = 8 pi - 8 pi^2/5
  // stripe:        h = sin(2 pi x) + 0.9                   DJLW = 8 pi - 4 pi^2/1.9
  // tilt:          h = sin(2 pi x) + 0.9 + 0.02 cos(2 pi y)
  //                                      DJLW = 8 pi - 4 pi^2 (1/1.92 + 0.02/1.92)
  // disk:          h = cos(2 pi (x-1/2)) + cos(2 pi (y-1/2)) - 1.2
  //                positive on a disk only, DJLW = 8 pi - 8 pi^2/0.8  (< 0)
  static const std::vector<FixtureInfo> table = {
      {"constant", "h = 1", false, true, kEightPi},
      {"single-bump", "1 + 0.25 cos(2pi x) cos(2pi y)", false, true,
       kEightPi - 8.0 * kPi * kPi * (0.25 / 1.25)},
      {"sign-changing-stripe", "sin(2pi x) + 0.9", true, true,
       kEightPi - 4.0 * kPi * kPi / 1.9},
      {"sign-changing-tilt", "sin(2pi x) + 0.9 + 0.02 cos(2pi y)", true, true,
       kEightPi - 4.0 * kPi * kPi * (1.0 / 1.92 + 0.02 / 1.92)},
      {"sign-changing-disk", "cos(2pi(x-1/2)) + cos(2pi(y-1/2)) - 1.2", true, false,
       kEightPi - 8.0 * kPi * kPi / 0.8},
  };
  return table;
}

inline const FixtureInfo& fixture_info(const std::string& name) {
  for (const auto& f : weight_fixtures())
    if (f.name == name) return f;
  throw ConfigError("unknown weight fixture: " + name);
}

inline ScalarField weight_fixture(const std::string& name, GridPtr grid) {
  ScalarField h(grid);
  const int n = grid->n();
  auto fill = [&](auto&& fn) {
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix)
        h.at(ix, iy) = fn(grid->x_of(ix), grid->y_of(iy));
  };
  if (name == "constant") {
    fill([](double, double) { return 1.0; });
  } else if (name == "single-bump") {
    fill([](double x, double y) {
      return 1.0 + 0.25 * std::cos(kTwoPi * x) * std::cos(kTwoPi * y);
    });
  } else if (name == "sign-changing-stripe") {
    fill([](double x, double) { return std::sin(kTwoPi * x) + 0.9; });
  } else if (name == "sign-changing-tilt") {
    fill([](double x, double y) {
      return std::sin(kTwoPi * x) + 0.9 + 0.02 * std::cos(kTwoPi * y);
    });
  } else if (name == "sign-changing-disk") {
    fill([](double x, double y) {
      return std::cos(kTwoPi * (x - 0.5)) + std::cos(kTwoPi * (y - 0.5)) - 1.2;
    });
  } else {
    throw ConfigError("unknown weight fixture: " + name);
  }
  return h;
}

// A smooth admissible bump init for weights that are negative on most of the
// surface (u = 0 would have nonpositive mass there). Centered at `center`
// with the given amplitude and radius.
inline ScalarField bump_init(GridPtr grid, Node center, double amplitude,
                             double radius = 0.2) {
  ScalarField u(grid);
  const int n = grid->n();
  const double cx = grid->x_of(center.ix), cy = grid->y_of(center.iy);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double d = std::hypot(wrap_delta(grid->x_of(ix) - cx),
                                  wrap_delta(grid->y_of(iy) - cy));
      if (d < radius) {
        const double c = std::cos(0.5 * kPi * d / radius);
        u.at(ix, iy) = amplitude * c * c;
      }
    }
  return u;
}

// Smooth random band-limited field: modes |kx|,|ky| <= kmax with N(0,1)
// amplitudes scaled by `amplitude`, deterministic in the seed.
inline ScalarField random_band_limited(GridPtr grid, std::uint64_t seed, int kmax = 3,
                                       double amplitude = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  struct Mode {
    int kx, ky;
    double amp, ph;
  };
  std::vector<Mode> modes;
  for (int ky = -kmax; ky <= kmax; ++ky)
    for (int kx = -kmax; kx <= kmax; ++kx) {
      if (kx == 0 && ky == 0) continue;
      modes.push_back({kx, ky, gauss(rng), phase(rng)});
    }
  ScalarField u(grid);
  const int n = grid->n();
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const double x = grid->x_of(ix), y = grid->y_of(iy);
      double v = 0;
      for (const auto& m : modes)
        v += m.amp * std::cos(kTwoPi * (m.kx * x + m.ky * y) + m.ph);
      u.at(ix, iy) = amplitude * v;
    }
  return u;
}

}  // namespace kwlab
