#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "salseg/core/array2d.hpp"
#include "salseg/core/errors.hpp"

namespace salseg {

// One 8-connected component of the saliency super-level set {s > threshold}.
struct SaliencyContour {
  std::vector<std::pair<int, int>> pixels;  // (row, col), row-major order
  long long area = 0;                       // A_c = |pixels|
  double cum_intensity = 0.0;               // I_c = sum of saliency over pixels
  double mean_intensity = 0.0;              // M_c = I_c / A_c

  std::pair<int, int> anchor() const { return pixels.front(); }
};

// Labels the strict super-level set with 8-connectivity and accumulates the
// per-contour statistics. Contours are returned sorted by descending
// cumulative intensity, ties by descending mean intensity, then by the
// smallest (row, col) member.
inline std::vector<SaliencyContour> extract_contours(const ImageF& saliency, double threshold) {
  for (const auto v : saliency) {
    if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("extract_contours: saliency out of [0,1]");
  }
  const int rows = saliency.rows();
  const int cols = saliency.cols();

  Array2D<std::int32_t> label(rows, cols, -1);
  std::vector<SaliencyContour> contours;
  std::vector<std::pair<int, int>> stack;

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (label(r, c) != -1 || !(saliency(r, c) > threshold)) continue;
      const auto id = static_cast<std::int32_t>(contours.size());
      SaliencyContour contour;
      stack.clear();
      stack.emplace_back(r, c);
      label(r, c) = id;
      while (!stack.empty()) {
        const auto [pr, pc] = stack.back();
        stack.pop_back();
        contour.pixels.emplace_back(pr, pc);
        contour.cum_intensity += saliency(pr, pc);
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int nr = pr + dr, nc = pc + dc;
            if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
            if (label(nr, nc) != -1 || !(saliency(nr, nc) > threshold)) continue;
            label(nr, nc) = id;
            stack.emplace_back(nr, nc);
          }
        }
      }
      contour.area = static_cast<long long>(contour.pixels.size());
      contour.mean_intensity = contour.cum_intensity / static_cast<double>(contour.area);
      std::sort(contour.pixels.begin(), contour.pixels.end());
      contours.push_back(std::move(contour));
    }
  }

  std::sort(contours.begin(), contours.end(), [](const SaliencyContour& a, const SaliencyContour& b) {
    if (a.cum_intensity != b.cum_intensity) return a.cum_intensity > b.cum_intensity;
    if (a.mean_intensity != b.mean_intensity) return a.mean_intensity > b.mean_intensity;
    return a.anchor() < b.anchor();
  });
  return contours;
}

}  // namespace salseg
