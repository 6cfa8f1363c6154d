#pragma once

#include <numbers>
#include <unsupported/Eigen/FFT>

#include "agwp/grid.hpp"
#include "agwp/types.hpp"

namespace agwp {

/// In-place FFT along every axis of a row-major n^d array (last axis
/// fastest). Inverse transforms carry the 1/N normalization.
inline void fft_all_axes(CVec& data, int d, int n, bool forward) {
  Eigen::FFT<double> fft;
  const Eigen::Index total = data.size();
  CVec line(n), out(n);
  Eigen::Index stride = 1;
  for (int axis = d - 1; axis >= 0; --axis) {
    const Eigen::Index block = stride * n;
    for (Eigen::Index b = 0; b < total / block; ++b) {
      for (Eigen::Index r = 0; r < stride; ++r) {
        const Eigen::Index base = b * block + r;
        for (int k = 0; k < n; ++k) line[k] = data[base + k * stride];
        if (forward)
          fft.fwd(out, line);
        else
          fft.inv(out, line);
        for (int k = 0; k < n; ++k) data[base + k * stride] = out[k];
      }
    }
    stride = block;
  }
}

/// Angular wavenumber of frequency index j on an n-point axis of length L.
inline double fft_wavenumber(int j, int n, double length) {
  int f = (j <= n / 2) ? j : j - n;
  return 2.0 * std::numbers::pi * static_cast<double>(f) / length;
}

/// Sum of squared wavenumbers per flat row-major index.
inline Vec fft_k_squared(const Box& box, int n) {
  const int d = box.dim();
  Eigen::Index total = 1;
  for (int j = 0; j < d; ++j) total *= n;
  Vec k2 = Vec::Zero(total);
  Eigen::Index stride = 1;
  for (int axis = d - 1; axis >= 0; --axis) {
    const double L = box.hi[axis] - box.lo[axis];
    const Eigen::Index block = stride * n;
    for (Eigen::Index b = 0; b < total / block; ++b)
      for (Eigen::Index r = 0; r < stride; ++r)
        for (int j = 0; j < n; ++j) {
          double k = fft_wavenumber(j, n, L);
          k2[b * block + r + j * stride] += k * k;
        }
    stride = block;
  }
  return k2;
}

}  // namespace agwp
