#pragma once

#include <cstdint>
#include <filesystem>

#include "bandbridge/models/parameters.hpp"
#include "bandbridge/models/spec.hpp"

namespace bandbridge::models {

// BBC1 layout, little-endian:
//   magic "BBC1" | version u16 | spec JSON length u32 | spec JSON |
//   epoch u32 | parameter count u32 |
//   per parameter: name length u16, name, rank u8, extents u32 x rank,
//                  payload byte offset u64 (from payload start) |
//   payload: f32 values of each parameter in manifest order.
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelSpec spec;
  ParameterSet<float> params;
  std::uint32_t epoch = 0;
};

void save_checkpoint(const std::filesystem::path& path, const ModelSpec& spec, const ParameterSet<float>& params,
                     std::uint32_t epoch);

// Validates the manifest against the architecture the spec describes.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bandbridge::models
