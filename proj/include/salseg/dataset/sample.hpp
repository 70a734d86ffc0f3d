#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "salseg/core/array2d.hpp"
#include "salseg/core/errors.hpp"
#include "salseg/core/png_io.hpp"
#include "salseg/core/resize.hpp"

namespace salseg {

// One (image, ground-truth mask, saliency map) triple. All three channels
// share one shape; image and saliency live in [0,1], the mask in {0,1}.
struct Sample {
  std::string id;
  ImageF image;
  MaskU8 mask;
  ImageF saliency;

  int rows() const { return image.rows(); }
  int cols() const { return image.cols(); }
};

inline void validate_sample(const Sample& s) {
  if (s.image.rows() != s.mask.rows() || s.image.cols() != s.mask.cols() ||
      s.image.rows() != s.saliency.rows() || s.image.cols() != s.saliency.cols()) {
    throw ValidationError("sample '" + s.id + "': channel shapes differ");
  }
  for (const auto v : s.mask) {
    if (v != 0 && v != 1) throw ValidationError("sample '" + s.id + "': mask is not binary");
  }
  for (const auto v : s.image) {
    if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("sample '" + s.id + "': image out of [0,1]");
  }
  for (const auto v : s.saliency) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw ValidationError("sample '" + s.id + "': saliency out of [0,1]");
    }
  }
}

namespace detail {

inline ImageF to_unit(const MaskU8& raw) {
  ImageF out(raw.rows(), raw.cols());
  for (int r = 0; r < raw.rows(); ++r) {
    for (int c = 0; c < raw.cols(); ++c) out(r, c) = static_cast<float>(raw(r, c)) / 255.0f;
  }
  return out;
}

inline MaskU8 binarize_u8(const MaskU8& raw, int threshold) {
  MaskU8 out(raw.rows(), raw.cols());
  for (int r = 0; r < raw.rows(); ++r) {
    for (int c = 0; c < raw.cols(); ++c) out(r, c) = raw(r, c) >= threshold ? 1 : 0;
  }
  return out;
}

inline MaskU8 unit_to_u8(const ImageF& img) {
  MaskU8 out(img.rows(), img.cols());
  for (int r = 0; r < img.rows(); ++r) {
    for (int c = 0; c < img.cols(); ++c) {
      const float v = std::clamp(img(r, c), 0.0f, 1.0f);
      out(r, c) = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  }
  return out;
}

inline std::set<std::string> png_stems(const std::filesystem::path& dir) {
  std::set<std::string> stems;
  if (!std::filesystem::is_directory(dir)) {
    throw ValidationError("dataset directory missing: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      stems.insert(entry.path().stem().string());
    }
  }
  return stems;
}

}  // namespace detail

// Dataset layout: <root>/images/<id>.png, <root>/masks/<id>.png,
// <root>/saliency/<id>.png, all 8-bit grayscale. Masks binarize at raw >= 128.
// Returns samples sorted by id.
inline std::vector<Sample> load_dataset(const std::filesystem::path& root) {
  const auto images_dir = root / "images";
  const auto masks_dir = root / "masks";
  const auto saliency_dir = root / "saliency";

  const auto image_ids = detail::png_stems(images_dir);
  const auto mask_ids = detail::png_stems(masks_dir);
  const auto saliency_ids = detail::png_stems(saliency_dir);

  std::set<std::string> all_ids;
  all_ids.insert(image_ids.begin(), image_ids.end());
  all_ids.insert(mask_ids.begin(), mask_ids.end());
  all_ids.insert(saliency_ids.begin(), saliency_ids.end());
  if (all_ids.empty()) throw ValidationError("empty dataset at " + root.string());

  for (const auto& id : all_ids) {
    if (!image_ids.count(id)) throw ValidationError("missing image file for basename '" + id + "'");
    if (!mask_ids.count(id)) throw ValidationError("missing mask file for basename '" + id + "'");
    if (!saliency_ids.count(id)) {
      throw ValidationError("missing saliency file for basename '" + id + "'");
    }
  }

  std::vector<Sample> samples;
  samples.reserve(all_ids.size());
  for (const auto& id : all_ids) {
    Sample s;
    s.id = id;
    s.image = detail::to_unit(read_png_gray8(images_dir / (id + ".png")));
    s.mask = detail::binarize_u8(read_png_gray8(masks_dir / (id + ".png")), 128);
    s.saliency = detail::to_unit(read_png_gray8(saliency_dir / (id + ".png")));
    validate_sample(s);
    samples.push_back(std::move(s));
  }
  return samples;  // std::set iteration is already id-sorted
}

// Writes the standard three-directory layout. Continuous channels are
// quantized to the 8-bit grid; reloading a previously loaded dataset
// reproduces the arrays exactly.
inline void save_dataset(const std::filesystem::path& root, const std::vector<Sample>& samples) {
  std::filesystem::create_directories(root / "images");
  std::filesystem::create_directories(root / "masks");
  std::filesystem::create_directories(root / "saliency");
  for (const auto& s : samples) {
    write_png_gray8(root / "images" / (s.id + ".png"), detail::unit_to_u8(s.image));
    MaskU8 mask255(s.mask.rows(), s.mask.cols());
    for (int r = 0; r < s.mask.rows(); ++r) {
      for (int c = 0; c < s.mask.cols(); ++c) mask255(r, c) = s.mask(r, c) ? 255 : 0;
    }
    write_png_gray8(root / "masks" / (s.id + ".png"), mask255);
    write_png_gray8(root / "saliency" / (s.id + ".png"), detail::unit_to_u8(s.saliency));
  }
}

// Resizes one sample to side x side. Image and saliency use bilinear
// interpolation; the mask uses nearest-neighbor and is re-binarized. The side
// must be a positive multiple of 16 so the four 2x poolings stay exact.
inline Sample resize_sample(const Sample& s, int side) {
  if (side < 16 || side % 16 != 0) {
    throw ValidationError("resize_sample: side must be a multiple of 16 and >= 16, got " +
                          std::to_string(side));
  }
  Sample out;
  out.id = s.id;
  out.image = resize_bilinear(s.image, side, side);
  out.saliency = resize_bilinear(s.saliency, side, side);
  MaskU8 resized = resize_nearest(s.mask, side, side);
  for (auto& v : resized) v = v >= 1 ? 1 : 0;
  out.mask = std::move(resized);
  for (auto& v : out.image) v = std::clamp(v, 0.0f, 1.0f);
  for (auto& v : out.saliency) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

inline std::vector<std::string> sample_ids(const std::vector<Sample>& samples) {
  std::vector<std::string> ids;
  ids.reserve(samples.size());
  for (const auto& s : samples) ids.push_back(s.id);
  return ids;
}

}  // namespace salseg
