#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "salseg/core/errors.hpp"
#include "salseg/core/rng.hpp"
#include "salseg/model/spec.hpp"
#include "salseg/nn/graph.hpp"
#include "salseg/nn/tensor.hpp"

namespace salseg {

// Declared shapes of one attention block, all in (channels, height, width).
struct AttentionBlockShapes {
  int level = 0;
  std::array<int, 3> feature_in{};
  std::array<int, 3> saliency_in{};
  std::array<int, 3> attention_map{};
  std::array<int, 3> output{};
};

// Encoder-decoder segmentation network. The encoder runs five double-conv
// levels with 2x2 max-pool transitions; the decoder mirrors it with nearest
// up-sampling, a 3x3 conv, and skip concatenation of the pre-pool encoder
// features. In the salient-attention variant each of the four pool
// transitions additionally computes a one-channel attention map from the
// pooled features and a max-pooled copy of the saliency input, and scales the
// pooled features by it before they enter the next level.
template <typename S>
class UNet {
 public:
  explicit UNet(const ModelSpec& spec) : spec_(spec) {
    spec_.validate();
    build();
  }

  UNet(UNet&&) = default;
  UNet& operator=(UNet&&) = default;
  UNet(const UNet&) = delete;
  UNet& operator=(const UNet&) = delete;

  const ModelSpec& spec() const { return spec_; }

  // images: N x 1 x side x side in [0,1]. saliency: same shape; required for
  // the salient-attention variant and ignored by the plain one.
  const Tensor<S>& forward(const Tensor<S>& images, const Tensor<S>* saliency = nullptr) {
    const int side = spec_.input_side;
    if (images.c != 1 || images.h != side || images.w != side || images.n < 1) {
      throw ValidationError("forward: image batch must be N x 1 x side x side");
    }
    net_.value(image_in_) = images;
    if (spec_.variant == Variant::kUNetSA) {
      if (saliency == nullptr) {
        throw ValidationError("forward: salient-attention variant requires a saliency batch");
      }
      if (!saliency->same_shape(images)) {
        throw ValidationError("forward: saliency batch shape differs from images");
      }
      Tensor<S> level = *saliency;
      for (int n = 1; n <= 4; ++n) {
        level = maxpool2_tensor(level);
        net_.value(saliency_in_[n - 1]) = level;
      }
    }
    net_.forward();
    return net_.value(output_);
  }

  void backward(const Tensor<S>& d_output) { net_.backward(output_, d_output); }
  void zero_param_grads() { net_.zero_param_grads(); }

  std::vector<typename Net<S>::Param*> parameters() { return net_.params(); }
  std::size_t parameter_count() const { return net_.param_count(); }

  const Tensor<S>& output() const { return net_.value(output_); }

  // --- attention introspection (salient-attention variant only) -----------

  AttentionBlockShapes attention_shapes(int level) const {
    require_attention(level);
    return block_shapes_[level - 1];
  }

  // Replaces the learned attention map with a constant; pass nullopt to
  // restore normal behavior.
  void override_attention(int level, std::optional<S> value) {
    require_attention(level);
    net_.set_gate_override("attn" + std::to_string(level) + ".gate", value);
  }

  const Tensor<S>& attention_pooled(int level) const {
    require_attention(level);
    return net_.value(pooled_var_[level - 1]);
  }
  const Tensor<S>& attention_map(int level) const {
    require_attention(level);
    return net_.value(alpha_var_[level - 1]);
  }
  const Tensor<S>& attention_output(int level) const {
    require_attention(level);
    return net_.value(gated_var_[level - 1]);
  }

 private:
  using Var = typename Net<S>::Var;

  void require_attention(int level) const {
    if (spec_.variant != Variant::kUNetSA) {
      throw ValidationError("attention blocks exist only in the salient-attention variant");
    }
    if (level < 1 || level > 4) throw ValidationError("attention level must be in 1..4");
  }

  Var double_conv(const std::string& prefix, Var in, int filters, Rng& rng) {
    Var x = net_.relu(prefix + ".relu1", net_.conv(prefix + ".conv1", in, filters, 3, rng));
    return net_.relu(prefix + ".relu2", net_.conv(prefix + ".conv2", x, filters, 3, rng));
  }

  // P = pool(F); A = sigmoid(conv1(relu(conv3(relu(conv1(P)) + relu(conv1(S))))));
  // O = A * P.
  Var attention_block(int level, Var features, Var saliency, Rng& rng) {
    const std::string prefix = "attn" + std::to_string(level);
    const int ac = spec_.attention_channels;
    Var pooled = net_.maxpool2(prefix + ".pool", features);
    Var feat = net_.relu(prefix + ".feat_relu", net_.conv(prefix + ".feat_proj", pooled, ac, 1, rng));
    Var sal = net_.relu(prefix + ".sal_relu", net_.conv(prefix + ".sal_proj", saliency, ac, 1, rng));
    Var mixed = net_.add(prefix + ".sum", feat, sal);
    Var refined = net_.relu(prefix + ".refine_relu", net_.conv(prefix + ".refine3", mixed, ac, 3, rng));
    Var score = net_.conv(prefix + ".refine1", refined, 1, 1, rng);
    Var alpha = net_.sigmoid(prefix + ".alpha", score);
    Var gated = net_.gate(prefix + ".gate", alpha, pooled);

    pooled_var_[level - 1] = pooled;
    alpha_var_[level - 1] = alpha;
    gated_var_[level - 1] = gated;

    const int side = spec_.input_side;
    AttentionBlockShapes& io = block_shapes_[level - 1];
    io.level = level;
    const auto fs = net_.shape(features);
    io.feature_in = {fs.c, fs.h, fs.w};
    io.saliency_in = {1, side, side};
    const auto as = net_.shape(alpha);
    io.attention_map = {as.c, as.h, as.w};
    const auto os = net_.shape(gated);
    io.output = {os.c, os.h, os.w};

    // Shape contract: block n maps side/2^(n-1) features with k_n channels to
    // side/2^n outputs with the same channel count.
    const int expect_in = side >> (level - 1);
    const int expect_out = side >> level;
    const int k_n = spec_.encoder_filters[level - 1];
    if (io.feature_in != std::array<int, 3>{k_n, expect_in, expect_in} ||
        io.attention_map != std::array<int, 3>{1, expect_out, expect_out} ||
        io.output != std::array<int, 3>{k_n, expect_out, expect_out}) {
      throw ValidationError("attention block " + std::to_string(level) + ": shape contract violated");
    }
    return gated;
  }

  void build() {
    const int side = spec_.input_side;
    const bool attention = spec_.variant == Variant::kUNetSA;
    Rng rng(spec_.init_seed);

    image_in_ = net_.add_input("image", 1, side, side);
    if (attention) {
      for (int n = 1; n <= 4; ++n) {
        saliency_in_[n - 1] =
            net_.add_input("saliency_l" + std::to_string(n), 1, side >> n, side >> n);
      }
    }

    std::array<Var, 4> skips{};
    Var x = image_in_;
    for (int level = 1; level <= 4; ++level) {
      Var features = double_conv("enc" + std::to_string(level), x, spec_.encoder_filters[level - 1], rng);
      skips[level - 1] = features;
      x = attention ? attention_block(level, features, saliency_in_[level - 1], rng)
                    : net_.maxpool2("enc" + std::to_string(level) + ".pool", features);
    }
    x = double_conv("bottleneck", x, spec_.encoder_filters[4], rng);

    for (int level = 4; level >= 1; --level) {
      const std::string prefix = "dec" + std::to_string(level);
      const int filters = spec_.encoder_filters[level - 1];
      Var up = net_.upsample2(prefix + ".up", x);
      up = net_.relu(prefix + ".up_relu", net_.conv(prefix + ".up_conv", up, filters, 3, rng));
      Var merged = net_.concat(prefix + ".concat", skips[level - 1], up);
      x = double_conv(prefix, merged, filters, rng);
    }
    output_ = net_.sigmoid("prob", net_.conv("final", x, 1, 1, rng));

    const auto out_shape = net_.shape(output_);
    if (out_shape.c != 1 || out_shape.h != side || out_shape.w != side) {
      throw ValidationError("network output shape contract violated");
    }
  }

  ModelSpec spec_;
  Net<S> net_;
  Var image_in_ = -1;
  std::array<Var, 4> saliency_in_{};
  std::array<Var, 4> pooled_var_{};
  std::array<Var, 4> alpha_var_{};
  std::array<Var, 4> gated_var_{};
  std::array<AttentionBlockShapes, 4> block_shapes_{};
  Var output_ = -1;
};

}  // namespace salseg
