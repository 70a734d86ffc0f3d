#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "salseg/core/errors.hpp"
#include "salseg/model/unet.hpp"

namespace salseg {

inline constexpr char kCheckpointMagic[8] = {'S', 'S', 'E', 'G', 'N', 'E', 'T', '1'};

template <typename S>
constexpr const char* scalar_tag() {
  if constexpr (sizeof(S) == 4) {
    return "f32";
  } else {
    return "f64";
  }
}

// Versioned checkpoint: JSON header (model spec + run metadata) followed by
// raw parameter blocks. Loading restores bit-identical weights.
template <typename S>
void save_checkpoint(const std::filesystem::path& path, UNet<S>& net,
                     const nlohmann::ordered_json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write checkpoint: " + path.string());

  const ModelSpec& spec = net.spec();
  nlohmann::ordered_json header;
  header["format_version"] = 1;
  header["scalar"] = scalar_tag<S>();
  header["variant"] = variant_name(spec.variant);
  header["input_side"] = spec.input_side;
  header["encoder_filters"] = spec.encoder_filters;
  header["attention_channels"] = spec.attention_channels;
  header["init_seed"] = spec.init_seed;
  header["meta"] = meta;
  const std::string header_str = header.dump();

  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const auto params = net.parameters();
  const std::uint32_t header_len = static_cast<std::uint32_t>(header_str.size());
  const std::uint32_t param_count = static_cast<std::uint32_t>(params.size());
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_str.data(), header_len);
  out.write(reinterpret_cast<const char*>(&param_count), sizeof(param_count));
  for (const auto* p : params) {
    const std::uint32_t name_len = static_cast<std::uint32_t>(p->name.size());
    out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    out.write(p->name.data(), name_len);
    const std::int32_t dims[4] = {p->value.n, p->value.c, p->value.h, p->value.w};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(p->value.v.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(S)));
  }
  if (!out) throw RuntimeAbort("checkpoint write failed: " + path.string());
}

template <typename S>
struct LoadedCheckpoint {
  UNet<S> net;
  nlohmann::json meta;
};

template <typename S>
LoadedCheckpoint<S> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read checkpoint: " + path.string());

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw ValidationError("not a checkpoint file: " + path.string());
  }
  std::uint32_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), header_len);
  if (!in) throw ValidationError("truncated checkpoint header: " + path.string());
  const nlohmann::json header = nlohmann::json::parse(header_str);

  if (header.at("scalar").get<std::string>() != scalar_tag<S>()) {
    throw ValidationError("checkpoint scalar type mismatch in " + path.string());
  }
  ModelSpec spec;
  spec.variant = variant_from_name(header.at("variant").get<std::string>());
  spec.input_side = header.at("input_side").get<int>();
  spec.encoder_filters = header.at("encoder_filters").get<std::array<int, 5>>();
  spec.attention_channels = header.at("attention_channels").get<int>();
  spec.init_seed = header.at("init_seed").get<std::uint64_t>();

  LoadedCheckpoint<S> loaded{UNet<S>(spec), header.value("meta", nlohmann::json::object())};

  std::uint32_t param_count = 0;
  in.read(reinterpret_cast<char*>(&param_count), sizeof(param_count));
  auto params = loaded.net.parameters();
  if (param_count != params.size()) {
    throw ValidationError("checkpoint parameter count mismatch in " + path.string());
  }
  for (auto* p : params) {
    std::uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    std::int32_t dims[4];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || name != p->name || dims[0] != p->value.n || dims[1] != p->value.c ||
        dims[2] != p->value.h || dims[3] != p->value.w) {
      throw ValidationError("checkpoint layout mismatch at parameter '" + name + "'");
    }
    in.read(reinterpret_cast<char*>(p->value.v.data()),
            static_cast<std::streamsize>(p->value.size() * sizeof(S)));
  }
  if (!in) throw ValidationError("truncated checkpoint data: " + path.string());
  return loaded;
}

}  // namespace salseg
