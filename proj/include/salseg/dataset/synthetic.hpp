#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "salseg/core/array2d.hpp"
#include "salseg/core/errors.hpp"
#include "salseg/core/rng.hpp"
#include "salseg/dataset/sample.hpp"

namespace salseg {

enum class SaliencyQuality { kSatisfactory = 0, kModerate = 1, kLow = 2, kPoor = 3 };

// Generator settings for BUS-like phantoms: dark elliptical lesions on a
// speckled background, with saliency maps drawn from four quality classes.
struct SyntheticConfig {
  int count = 0;
  int size = 128;
  std::array<double, 4> quality_mix{1.0, 0.0, 0.0, 0.0};  // satisfactory/moderate/low/poor
  std::uint64_t seed = 0;

  void validate() const {
    if (count < 0) throw ValidationError("synthetic config: count must be >= 0");
    if (size < 32) throw ValidationError("synthetic config: size must be >= 32");
    double sum = 0.0;
    for (const double w : quality_mix) {
      if (w < 0.0) throw ValidationError("synthetic config: quality_mix weights must be >= 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError("synthetic config: quality_mix must sum to 1");
    }
  }
};

namespace detail {

struct Ellipse {
  double cx, cy;      // center, pixel units
  double a, b;        // semi-axes
  double theta;       // rotation
  double reach() const { return std::max(a, b); }

  // Normalized radius of a pixel center: <= 1 means inside.
  double rho(double r, double c) const {
    const double dx = c - cx;
    const double dy = r - cy;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double u = (dx * ct + dy * st) / a;
    const double v = (-dx * st + dy * ct) / b;
    return std::sqrt(u * u + v * v);
  }

  double angle(double r, double c) const {
    const double dx = c - cx;
    const double dy = r - cy;
    const double ct = std::cos(theta), st = std::sin(theta);
    return std::atan2((-dx * st + dy * ct) / b, (dx * ct + dy * st) / a);
  }
};

inline Array2D<double> box_blur(const Array2D<double>& src, int radius) {
  Array2D<double> out(src.rows(), src.cols());
  const int k = 2 * radius + 1;
  for (int r = 0; r < src.rows(); ++r) {
    for (int c = 0; c < src.cols(); ++c) {
      double sum = 0.0;
      for (int dr = -radius; dr <= radius; ++dr) {
        const int rr = std::clamp(r + dr, 0, src.rows() - 1);
        for (int dc = -radius; dc <= radius; ++dc) {
          const int cc = std::clamp(c + dc, 0, src.cols() - 1);
          sum += src(rr, cc);
        }
      }
      out(r, c) = sum / (k * k);
    }
  }
  return out;
}

// Interior box blur: pixels whose kernel leaves the image keep the clamped
// average; a filled region interior reaches exactly 1.0 only where the whole
// kernel is inside the region, which pins the map's argmax inside the mask.
inline ImageF quantize_unit(const Array2D<double>& src) {
  ImageF out(src.rows(), src.cols());
  for (int r = 0; r < src.rows(); ++r) {
    for (int c = 0; c < src.cols(); ++c) {
      const double v = std::clamp(src(r, c), 0.0, 1.0);
      out(r, c) = static_cast<float>(std::lround(v * 255.0) / 255.0);
    }
  }
  return out;
}

inline double ellipse_distance(const Ellipse& a, const Ellipse& b) {
  return std::hypot(a.cx - b.cx, a.cy - b.cy) - a.reach() - b.reach();
}

// Places an ellipse of roughly the requested area away from `avoid`.
// Axes shrink gradually if placement keeps failing.
inline bool place_clear_ellipse(Rng& rng, int size, double target_area, double value_margin,
                                const std::vector<Ellipse>& avoid, Ellipse& out) {
  double area = target_area;
  for (int attempt = 0; attempt < 200; ++attempt) {
    if (attempt > 0 && attempt % 50 == 0) area *= 0.8;
    const double aspect = rng.uniform(0.7, 1.3);
    const double a = std::max(2.5, std::sqrt(area * aspect / 3.14159265358979323846));
    const double b = std::max(2.5, area / (3.14159265358979323846 * a));
    const double reach = std::max(a, b);
    const double lo = reach + 2.0, hi = size - reach - 2.0;
    if (lo >= hi) continue;
    Ellipse e{rng.uniform(lo, hi), rng.uniform(lo, hi), a, b, rng.uniform(0.0, 3.14159265358979323846)};
    bool clear = true;
    for (const auto& other : avoid) {
      if (ellipse_distance(e, other) < value_margin) {
        clear = false;
        break;
      }
    }
    if (clear) {
      out = e;
      return true;
    }
  }
  return false;
}

struct Phantom {
  std::vector<Ellipse> tumors;
  MaskU8 mask;
  ImageF image;
};

inline Phantom make_phantom(Rng& rng, int size, int n_tumors) {
  Phantom ph;
  const double amin = std::max(4.0, 0.06 * size);
  const double amax = std::max(amin + 1.0, 0.16 * size);
  for (int t = 0; t < n_tumors; ++t) {
    bool placed = false;
    for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
      const double a = rng.uniform(amin, amax);
      const double b = rng.uniform(amin, amax);
      const double reach = std::max(a, b);
      const double lo = reach + 3.0, hi = size - reach - 3.0;
      if (lo >= hi) break;
      Ellipse e{rng.uniform(lo, hi), rng.uniform(lo, hi), a, b,
                rng.uniform(0.0, 3.14159265358979323846)};
      bool clear = true;
      for (const auto& other : ph.tumors) {
        if (ellipse_distance(e, other) < 6.0) clear = false;
      }
      if (clear) {
        ph.tumors.push_back(e);
        placed = true;
      }
    }
  }
  if (ph.tumors.empty()) {
    // Fall back to a centered lesion; placement above can only fail on
    // pathologically small canvases.
    ph.tumors.push_back(Ellipse{size / 2.0, size / 2.0, amin, amin, 0.0});
  }

  ph.mask = MaskU8(size, size, 0);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      for (const auto& e : ph.tumors) {
        if (e.rho(r, c) <= 1.0) {
          ph.mask(r, c) = 1;
          break;
        }
      }
    }
  }

  const double base = rng.uniform(0.55, 0.75);
  const double gradient = rng.uniform(-0.05, 0.05);
  std::vector<double> dimming(ph.tumors.size());
  for (auto& d : dimming) d = rng.uniform(0.30, 0.55);

  Array2D<double> clean(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      double v = base + gradient * (static_cast<double>(r) / size - 0.5);
      for (std::size_t t = 0; t < ph.tumors.size(); ++t) {
        if (ph.tumors[t].rho(r, c) <= 1.0) {
          v *= dimming[t];
          break;
        }
      }
      clean(r, c) = v;
    }
  }
  clean = box_blur(clean, 1);

  // Multiplicative speckle from a spatially correlated log-normal field.
  Array2D<double> noise(size, size);
  for (auto& v : noise) v = rng.normal();
  noise = box_blur(noise, 1);
  const double sigma = 0.18;
  Array2D<double> speckled(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      speckled(r, c) = clean(r, c) * std::exp(sigma * noise(r, c) - 0.5 * sigma * sigma);
    }
  }
  ph.image = quantize_unit(speckled);
  return ph;
}

inline Array2D<double> rasterize_plateau(int size, const Ellipse& e, double peak, double falloff) {
  Array2D<double> out(size, size, 0.0);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double rho = e.rho(r, c);
      if (rho <= 1.0) out(r, c) = peak - falloff * rho * rho;
    }
  }
  return out;
}

inline double region_area(const Ellipse& e) { return 3.14159265358979323846 * e.a * e.b; }

inline ImageF saliency_satisfactory(Rng& rng, const Phantom& ph) {
  const int size = ph.mask.rows();
  Array2D<double> m(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) m(r, c) = ph.mask(r, c);
  }
  Array2D<double> blurred = box_blur(m, 2);
  const double scale = rng.uniform(0.86, 0.98);
  for (auto& v : blurred) v *= scale;
  return quantize_unit(blurred);
}

inline ImageF saliency_moderate(Rng& rng, const Phantom& ph) {
  const int size = ph.mask.rows();
  Array2D<double> warped(size, size, 0.0);
  for (const auto& e : ph.tumors) {
    const double amp = rng.uniform(0.18, 0.30);
    const double phase = rng.uniform(0.0, 6.28318530717958648);
    const int lobes = 2 + static_cast<int>(rng.uniform_int(3));
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        const double limit = 1.0 + amp * std::sin(lobes * e.angle(r, c) + phase);
        if (e.rho(r, c) <= limit) warped(r, c) = 1.0;
      }
    }
  }
  Array2D<double> blurred = box_blur(warped, 3);
  double peak = 0.0;
  for (const auto v : blurred) peak = std::max(peak, v);
  const double scale = rng.uniform(0.72, 0.9) / std::max(peak, 1e-9);
  for (auto& v : blurred) v *= scale;
  return quantize_unit(blurred);
}

// Low quality: the dominant contour still sits on a tumor, but one or two
// background distractors carry comparable cumulative intensity and a higher
// mean, so the confidence rules flag the map as ambiguous.
inline ImageF saliency_low(Rng& rng, const Phantom& ph) {
  const int size = ph.mask.rows();
  const Ellipse* main_tumor = &ph.tumors.front();
  for (const auto& e : ph.tumors) {
    if (region_area(e) > region_area(*main_tumor)) main_tumor = &e;
  }
  const double main_value = rng.uniform(0.50, 0.58);
  Array2D<double> sal = rasterize_plateau(size, *main_tumor, main_value, 0.04);
  const double main_cum = std::accumulate(sal.begin(), sal.end(), 0.0);

  std::vector<Ellipse> avoid = ph.tumors;
  const int n_distractors = 1 + static_cast<int>(rng.uniform_int(2));
  for (int d = 0; d < n_distractors; ++d) {
    const double value = main_value + rng.uniform(0.15, 0.22);
    const double ratio = rng.uniform(0.62, 0.80);
    const double target_area = ratio * main_cum / value;
    Ellipse e;
    if (!place_clear_ellipse(rng, size, target_area, 5.0, avoid, e)) continue;
    avoid.push_back(e);
    const Array2D<double> blob = rasterize_plateau(size, e, value, 0.04);
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) sal(r, c) = std::max(sal(r, c), blob(r, c));
    }
  }
  ImageF out = quantize_unit(sal);
  // Saliency on tumor pixels only for the main blob; other tumors stay dark.
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      if (ph.mask(r, c) && main_tumor->rho(r, c) > 1.0) out(r, c) = 0.0f;
    }
  }
  return out;
}

inline ImageF saliency_poor(Rng& rng, const Phantom& ph) {
  const int size = ph.mask.rows();
  const double area = region_area(ph.tumors.front());
  Ellipse e;
  if (!place_clear_ellipse(rng, size, area, 5.0, ph.tumors, e)) {
    e = Ellipse{4.0, 4.0, 3.0, 3.0, 0.0};  // corner fallback, clipped below
  }
  Array2D<double> sal = rasterize_plateau(size, e, rng.uniform(0.55, 0.8), 0.05);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      if (ph.mask(r, c)) sal(r, c) = 0.0;
    }
  }
  return quantize_unit(sal);
}

}  // namespace detail

// Exact class counts for a given mix via largest-remainder apportionment.
inline std::array<int, 4> quality_counts(const SyntheticConfig& cfg) {
  std::array<int, 4> counts{};
  std::array<double, 4> remainders{};
  int assigned = 0;
  for (int q = 0; q < 4; ++q) {
    const double ideal = cfg.quality_mix[q] * cfg.count;
    counts[q] = static_cast<int>(std::floor(ideal));
    remainders[q] = ideal - counts[q];
    assigned += counts[q];
  }
  while (assigned < cfg.count) {
    int best = 0;
    for (int q = 1; q < 4; ++q) {
      if (remainders[q] > remainders[best]) best = q;
    }
    ++counts[best];
    remainders[best] = -1.0;
    ++assigned;
  }
  return counts;
}

struct SyntheticSample {
  Sample sample;
  SaliencyQuality quality;
};

inline std::vector<SyntheticSample> generate_synthetic_labeled(const SyntheticConfig& cfg) {
  cfg.validate();

  std::vector<SaliencyQuality> labels;
  const auto counts = quality_counts(cfg);
  for (int q = 0; q < 4; ++q) {
    labels.insert(labels.end(), counts[q], static_cast<SaliencyQuality>(q));
  }
  Rng assign_rng(mix_seed(cfg.seed, 0xA551));
  assign_rng.shuffle(labels);

  std::vector<SyntheticSample> out;
  out.reserve(cfg.count);
  for (int i = 0; i < cfg.count; ++i) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(i), 0xDA7A));
    const SaliencyQuality quality = labels[i];

    // A single lesion guarantees a single dominant saliency contour for the
    // satisfactory class; the other classes may carry a second lesion.
    int n_tumors = 1;
    if (quality != SaliencyQuality::kSatisfactory && rng.uniform() < 0.3) n_tumors = 2;

    detail::Phantom ph = detail::make_phantom(rng, cfg.size, n_tumors);

    SyntheticSample item;
    item.quality = quality;
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%05d", i);
    item.sample.id = id;
    item.sample.image = std::move(ph.image);
    switch (quality) {
      case SaliencyQuality::kSatisfactory:
        item.sample.saliency = detail::saliency_satisfactory(rng, ph);
        break;
      case SaliencyQuality::kModerate:
        item.sample.saliency = detail::saliency_moderate(rng, ph);
        break;
      case SaliencyQuality::kLow:
        item.sample.saliency = detail::saliency_low(rng, ph);
        break;
      case SaliencyQuality::kPoor:
        item.sample.saliency = detail::saliency_poor(rng, ph);
        break;
    }
    item.sample.mask = std::move(ph.mask);
    validate_sample(item.sample);
    out.push_back(std::move(item));
  }
  return out;
}

inline std::vector<Sample> generate_synthetic(const SyntheticConfig& cfg) {
  std::vector<Sample> out;
  for (auto& item : generate_synthetic_labeled(cfg)) out.push_back(std::move(item.sample));
  return out;
}

}  // namespace salseg
