#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "salseg/core/array2d.hpp"

namespace salseg {

// Bilinear resampling with half-pixel center alignment and clamped edges.
// A constant image stays constant; resizing to the source size is the identity.
template <typename T>
Array2D<T> resize_bilinear(const Array2D<T>& src, int out_rows, int out_cols) {
  if (src.empty()) throw ValidationError("resize_bilinear: empty source");
  if (out_rows <= 0 || out_cols <= 0) throw ValidationError("resize_bilinear: bad target shape");
  Array2D<T> out(out_rows, out_cols);
  const double sr = static_cast<double>(src.rows()) / out_rows;
  const double sc = static_cast<double>(src.cols()) / out_cols;
  for (int r = 0; r < out_rows; ++r) {
    const double fy = (r + 0.5) * sr - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    const double wy = fy - y0;
    const int y1 = std::clamp(y0 + 1, 0, src.rows() - 1);
    y0 = std::clamp(y0, 0, src.rows() - 1);
    for (int c = 0; c < out_cols; ++c) {
      const double fx = (c + 0.5) * sc - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      const double wx = fx - x0;
      const int x1 = std::clamp(x0 + 1, 0, src.cols() - 1);
      x0 = std::clamp(x0, 0, src.cols() - 1);
      const double top = (1.0 - wx) * src(y0, x0) + wx * src(y0, x1);
      const double bot = (1.0 - wx) * src(y1, x0) + wx * src(y1, x1);
      out(r, c) = static_cast<T>((1.0 - wy) * top + wy * bot);
    }
  }
  return out;
}

// Nearest-neighbor resampling; each target pixel takes the source pixel whose
// center is closest under the same half-pixel mapping.
template <typename T>
Array2D<T> resize_nearest(const Array2D<T>& src, int out_rows, int out_cols) {
  if (src.empty()) throw ValidationError("resize_nearest: empty source");
  if (out_rows <= 0 || out_cols <= 0) throw ValidationError("resize_nearest: bad target shape");
  Array2D<T> out(out_rows, out_cols);
  const double sr = static_cast<double>(src.rows()) / out_rows;
  const double sc = static_cast<double>(src.cols()) / out_cols;
  for (int r = 0; r < out_rows; ++r) {
    const int y = std::clamp(static_cast<int>(std::floor((r + 0.5) * sr)), 0, src.rows() - 1);
    for (int c = 0; c < out_cols; ++c) {
      const int x = std::clamp(static_cast<int>(std::floor((c + 0.5) * sc)), 0, src.cols() - 1);
      out(r, c) = src(y, x);
    }
  }
  return out;
}

}  // namespace salseg
