#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "salseg/core/errors.hpp"

namespace salseg {

// Architectural variants. The salient-attention architecture serves both the
// full-map and the single-contour pipelines; the latter differs only in how
// its saliency inputs are preprocessed.
enum class Variant { kUNet, kUNetSA };

inline std::string variant_name(Variant v) { return v == Variant::kUNet ? "unet" : "unet_sa"; }

inline Variant variant_from_name(const std::string& s) {
  if (s == "unet") return Variant::kUNet;
  if (s == "unet_sa") return Variant::kUNetSA;
  throw ValidationError("unknown architecture variant: " + s);
}

// Everything needed to construct a trainable network deterministically.
struct ModelSpec {
  Variant variant = Variant::kUNet;
  int input_side = 256;
  std::array<int, 5> encoder_filters{32, 32, 64, 64, 128};
  int attention_channels = 128;
  std::uint64_t init_seed = 1;

  void validate() const {
    if (input_side < 16 || input_side % 16 != 0) {
      throw ValidationError("model spec: input_side must be a positive multiple of 16");
    }
    for (const int f : encoder_filters) {
      if (f < 1) throw ValidationError("model spec: encoder filter counts must be >= 1");
    }
    if (attention_channels < 1) throw ValidationError("model spec: attention_channels must be >= 1");
  }
};

}  // namespace salseg
