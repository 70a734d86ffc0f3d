#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "salseg/core/array2d.hpp"
#include "salseg/core/errors.hpp"

namespace salseg {

struct BoundaryDistances {
  double hd = 0.0;  // Hausdorff: max over both directed max-of-min distances
  double md = 0.0;  // mean distance: average of the two directed mean distances
};

namespace detail {

// Boundary pixels of a region: region members 8-adjacent to at least one
// non-member (pixels on the image edge count their out-of-image neighbors as
// background).
inline std::vector<std::pair<int, int>> boundary_pixels(const MaskU8& mask) {
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      if (!mask(r, c)) continue;
      bool edge = false;
      for (int dr = -1; dr <= 1 && !edge; ++dr) {
        for (int dc = -1; dc <= 1 && !edge; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int nr = r + dr, nc = c + dc;
          if (nr < 0 || nr >= mask.rows() || nc < 0 || nc >= mask.cols() || !mask(nr, nc)) {
            edge = true;
          }
        }
      }
      if (edge) out.emplace_back(r, c);
    }
  }
  return out;
}

struct DirectedStats {
  double max = 0.0;
  double mean = 0.0;
};

inline DirectedStats directed_distances(const std::vector<std::pair<int, int>>& from,
                                        const std::vector<std::pair<int, int>>& to) {
  DirectedStats stats;
  double sum = 0.0;
  for (const auto& [r, c] : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [tr, tc] : to) {
      const double dr = r - tr, dc = c - tc;
      const double d2 = dr * dr + dc * dc;
      if (d2 < best) best = d2;
    }
    const double d = std::sqrt(best);
    stats.max = std::max(stats.max, d);
    sum += d;
  }
  stats.mean = sum / static_cast<double>(from.size());
  return stats;
}

}  // namespace detail

// Symmetric boundary distances between two regions, in pixels. Returns
// nullopt when either mask is empty; callers exclude such pairs from
// aggregation and count them.
inline std::optional<BoundaryDistances> boundary_distances(const MaskU8& pred,
                                                           const MaskU8& truth) {
  if (!pred.same_shape(truth)) throw ValidationError("boundary_distances: shape mismatch");
  const auto pb = detail::boundary_pixels(pred);
  const auto tb = detail::boundary_pixels(truth);
  if (pb.empty() || tb.empty()) return std::nullopt;
  const auto t2p = detail::directed_distances(tb, pb);
  const auto p2t = detail::directed_distances(pb, tb);
  BoundaryDistances out;
  out.hd = std::max(t2p.max, p2t.max);
  out.md = 0.5 * (t2p.mean + p2t.mean);
  return out;
}

}  // namespace salseg
