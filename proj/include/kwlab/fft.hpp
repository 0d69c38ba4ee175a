#pragma once

// Radix-2 FFT for the periodic grids used throughout. Grid sides are powers
// of two by construction, so a plain iterative Cooley-Tukey kernel with a
// per-call twiddle table is all we need. No global state: every call is a
// pure function of its inputs, which keeps results bit-reproducible and the
// transforms safe to run from concurrent workers.

#include <algorithm>
#include <cassert>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

namespace kwlab::fft {

using cdouble = std::complex<double>;

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// tw[j] = exp(-2 pi i j / n) for j in [0, n/2).
inline std::vector<cdouble> twiddles(int n) {
  std::vector<cdouble> tw(static_cast<std::size_t>(n / 2));
  const double step = -2.0 * 3.14159265358979323846 / n;
  for (int j = 0; j < n / 2; ++j) tw[static_cast<std::size_t>(j)] = std::polar(1.0, step * j);
  return tw;
}

// In-place transform of a contiguous length-n signal. `inverse` conjugates the
// twiddles; scaling by 1/n is the caller's job (fft2 below handles it).
inline void transform(cdouble* a, int n, bool inverse, const std::vector<cdouble>& tw) {
  assert(is_pow2(n) && static_cast<int>(tw.size()) == n / 2);
  // bit-reversal permutation
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const int half = len >> 1;
    const int stride = n / len;
    for (int i = 0; i < n; i += len) {
      for (int j = 0; j < half; ++j) {
        cdouble w = tw[static_cast<std::size_t>(j * stride)];
        if (inverse) w = std::conj(w);
        const cdouble u = a[i + j];
        const cdouble v = a[i + j + half] * w;
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
    }
  }
}

namespace detail {

inline void transpose(std::vector<cdouble>& a, int n) {
  constexpr int kTile = 32;
  for (int jb = 0; jb < n; jb += kTile)
    for (int ib = jb; ib < n; ib += kTile) {
      const int jmax = std::min(jb + kTile, n);
      const int imax = std::min(ib + kTile, n);
      for (int j = jb; j < jmax; ++j) {
        const int istart = (ib == jb) ? j + 1 : ib;
        for (int i = istart; i < imax; ++i)
          std::swap(a[static_cast<std::size_t>(j) * n + i],
                    a[static_cast<std::size_t>(i) * n + j]);
      }
    }
}

}  // namespace detail

// 2-D transform of a row-major n x n array. Forward is the plain DFT sum;
// inverse applies the 1/n^2 normalization so inverse(forward(x)) == x.
inline void fft2(std::vector<cdouble>& a, int n, bool inverse) {
  assert(static_cast<int>(a.size()) == n * n);
  const auto tw = twiddles(n);
  for (int row = 0; row < n; ++row)
    transform(a.data() + static_cast<std::size_t>(row) * n, n, inverse, tw);
  detail::transpose(a, n);
  for (int row = 0; row < n; ++row)
    transform(a.data() + static_cast<std::size_t>(row) * n, n, inverse, tw);
  detail::transpose(a, n);
  if (inverse) {
    const double scale = 1.0 / (static_cast<double>(n) * n);
    for (auto& z : a) z *= scale;
  }
}

inline std::vector<cdouble> forward(const std::vector<double>& values, int n) {
  std::vector<cdouble> a(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) a[i] = values[i];
  fft2(a, n, /*inverse=*/false);
  return a;
}

inline std::vector<double> inverse_real(std::vector<cdouble> spec, int n) {
  fft2(spec, n, /*inverse=*/true);
  std::vector<double> out(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) out[i] = spec[i].real();
  return out;
}

// Integer wavenumber of DFT bin i on a length-n grid: 0..n/2-1, then negative.
inline int freq(int i, int n) { return i < n / 2 ? i : i - n; }

}  // namespace kwlab::fft
