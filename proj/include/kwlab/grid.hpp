#pragma once

// Discrete geometry of the unit-area flat torus [0,1)^2, optionally carrying
// a conformal metric g = e^{2w}(dx^2 + dy^2). The grid is N x N with N a
// power of two (spectral transforms), nodes at (ix/N, iy/N), all fields
// doubly periodic. Construction rescales w by an additive constant so the
// total area int e^{2w} dx equals one; everything downstream relies on that
// normalization.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "kwlab/errors.hpp"
#include "kwlab/fft.hpp"
#include "kwlab/util.hpp"

namespace kwlab {

struct Node {
  int ix = 0;
  int iy = 0;
  friend bool operator==(const Node&, const Node&) = default;
};

// Wraps a coordinate difference into [-1/2, 1/2).
inline double wrap_delta(double d) { return d - std::floor(d + 0.5); }

class SurfaceGrid {
 public:
  static SurfaceGrid flat(int n) { return SurfaceGrid(n, std::vector<double>()); }

  // w_raw is shifted by a constant so that int e^{2w} dx = 1.
  static SurfaceGrid conformal(int n, std::vector<double> w_raw) {
    return SurfaceGrid(n, std::move(w_raw));
  }

  int n() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  bool is_flat() const { return flat_; }

  std::size_t idx(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * n_ + ix;
  }
  std::size_t idx(Node p) const { return idx(p.ix, p.iy); }
  Node node_of(std::size_t i) const {
    return Node{static_cast<int>(i % static_cast<std::size_t>(n_)),
                static_cast<int>(i / static_cast<std::size_t>(n_))};
  }
  double x_of(int ix) const { return static_cast<double>(ix) / n_; }
  double y_of(int iy) const { return static_cast<double>(iy) / n_; }

  // Flat periodic distance between nodes.
  double flat_distance(Node a, Node b) const {
    const double dx = wrap_delta(x_of(a.ix) - x_of(b.ix));
    const double dy = wrap_delta(y_of(a.iy) - y_of(b.iy));
    return std::hypot(dx, dy);
  }

  const std::vector<double>& conformal_factor() const { return w_; }
  const std::vector<double>& area_element() const { return e2w_; }
  const std::vector<double>& gauss_curvature() const { return curvature_; }

  double w_at(Node p) const { return w_[idx(p)]; }

  // Total metric area; equals 1 by construction.
  double area() const {
    KahanSum s;
    const double cell = 1.0 / (static_cast<double>(n_) * n_);
    for (double a : e2w_) s.add(a * cell);
    return s.value();
  }

 private:
  SurfaceGrid(int n, std::vector<double> w_raw) : n_(n) {
    if (!fft::is_pow2(n) || n < 32)
      throw std::invalid_argument("grid side must be a power of two, at least 32");
    const std::size_t total = static_cast<std::size_t>(n) * n;
    if (w_raw.empty()) {
      flat_ = true;
      w_.assign(total, 0.0);
      e2w_.assign(total, 1.0);
      curvature_.assign(total, 0.0);
      return;
    }
    if (w_raw.size() != total)
      throw std::invalid_argument("conformal factor has wrong length");
    w_ = std::move(w_raw);
    // additive shift: int e^{2(w+c)} dx = 1  =>  c = -log(int e^{2w} dx) / 2
    KahanSum s;
    const double cell = 1.0 / (static_cast<double>(n) * n);
    for (double v : w_) s.add(std::exp(2.0 * v) * cell);
    const double shift = -0.5 * std::log(s.value());
    flat_ = true;
    for (double& v : w_) {
      v += shift;
      if (v != 0.0) flat_ = false;
    }
    e2w_.resize(total);
    for (std::size_t i = 0; i < total; ++i) e2w_[i] = std::exp(2.0 * w_[i]);
    // K = -e^{-2w} Delta_flat w, with the flat Laplacian taken spectrally.
    auto spec = fft::forward(w_, n);
    for (int iy = 0; iy < n; ++iy) {
      const double ky = fft::freq(iy, n);
      for (int ix = 0; ix < n; ++ix) {
        const double kx = fft::freq(ix, n);
        spec[idx(ix, iy)] *= -4.0 * kPi * kPi * (kx * kx + ky * ky);
      }
    }
    auto lap_w = fft::inverse_real(std::move(spec), n);
    curvature_.resize(total);
    for (std::size_t i = 0; i < total; ++i) curvature_[i] = -lap_w[i] / e2w_[i];
  }

  int n_;
  bool flat_ = true;
  std::vector<double> w_;
  std::vector<double> e2w_;
  std::vector<double> curvature_;
};

using GridPtr = std::shared_ptr<const SurfaceGrid>;

inline GridPtr make_flat_grid(int n) {
  return std::make_shared<const SurfaceGrid>(SurfaceGrid::flat(n));
}
inline GridPtr make_conformal_grid(int n, std::vector<double> w_raw) {
  return std::make_shared<const SurfaceGrid>(SurfaceGrid::conformal(n, std::move(w_raw)));
}

// Real values on grid nodes, row-major (iy * N + ix).
struct ScalarField {
  ScalarField() = default;
  explicit ScalarField(GridPtr g, double fill = 0.0)
      : grid(std::move(g)), values(grid->size(), fill) {}
  ScalarField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->size())
      throw std::invalid_argument("field length does not match grid");
  }

  GridPtr grid;
  std::vector<double> values;

  int n() const { return grid->n(); }
  double& at(int ix, int iy) { return values[grid->idx(ix, iy)]; }
  double at(int ix, int iy) const { return values[grid->idx(ix, iy)]; }
  double& at(Node p) { return values[grid->idx(p)]; }
  double at(Node p) const { return values[grid->idx(p)]; }

  Node argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
      if (values[i] > values[best]) best = i;
    return grid->node_of(best);
  }
  double max() const {
    double m = values[0];
    for (double v : values) m = std::max(m, v);
    return m;
  }
  double min() const {
    double m = values[0];
    for (double v : values) m = std::min(m, v);
    return m;
  }
};

}  // namespace kwlab
