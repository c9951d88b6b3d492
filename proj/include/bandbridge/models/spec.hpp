#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "bandbridge/autograd/ops.hpp"
#include "json.hpp"

namespace bandbridge::models {

enum class ModelKind { Unet, EsrtLite, BicubicPassthrough };

std::string_view kind_name(ModelKind kind);
ModelKind kind_from_name(std::string_view name);

struct UnetConfig {
  std::size_t depth = 3;
  std::size_t base_channels = 32;
};

struct EsrtConfig {
  std::size_t backbone_blocks = 2;
  std::size_t transformer_blocks = 2;
  std::size_t embed_channels = 32;
  std::size_t heads = 4;
  std::size_t window = 8;
  // Attention runs on embed_channels / split_factor query/key/value channels.
  std::size_t split_factor = 2;
};

struct ModelSpec {
  ModelKind kind = ModelKind::Unet;
  std::size_t in_channels = 7;
  std::size_t out_channels = 6;
  UnetConfig unet;
  EsrtConfig esrt;
  std::uint64_t seed = 0;
  ag::PaddingMode padding = ag::PaddingMode::Zero;

  // Throws SpecError.
  void validate() const;

  // Spatial extents must be multiples of this (2^depth or the window).
  std::size_t spatial_multiple() const;
};

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& doc);

}  // namespace bandbridge::models
