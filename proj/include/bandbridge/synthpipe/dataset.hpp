#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "bandbridge/synthpipe/patches.hpp"
#include "bandbridge/synthpipe/scene.hpp"
#include "json.hpp"

namespace bandbridge::synthpipe {

struct DatasetConfig {
  std::size_t scenes = 40;
  std::uint64_t seed = 7;
  std::array<double, 3> ratios{0.6, 0.2, 0.2};  // train, val, test
  int max_shift = 3;                            // LR pixels
  // Per-scene fields (seed, shift, origin) are derived; the rest is shared.
  SceneSpec scene;

  void validate() const;
};

nlohmann::json to_json(const DatasetConfig& config);
DatasetConfig dataset_config_from_json(const nlohmann::json& doc, DatasetConfig base = {});

// Scenes per split by largest remainder; throws SpecError if a split would be empty.
std::array<std::size_t, 3> split_scene_counts(std::size_t scenes, const std::array<double, 3>& ratios);

// Scene-level split assignment, scene synthesis, co-registration and
// tiling. Writes <root>/<split>/<scene>_<tile>.bbp pair files and
// <root>/manifest.json.
SplitManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& root);

nlohmann::json manifest_json(const SplitManifest& manifest, const DatasetConfig& config);
SplitManifest read_manifest(const std::filesystem::path& root);

std::filesystem::path pair_path(const std::filesystem::path& root, Split split, const std::string& patch_id);

}  // namespace bandbridge::synthpipe
