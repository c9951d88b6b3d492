#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bandbridge/raster/raster.hpp"
#include "bandbridge/synthpipe/scene.hpp"
#include "json.hpp"

namespace bandbridge::synthpipe {

inline constexpr std::size_t kPatchSize = 128;

enum class Split { Train, Val, Test };
inline constexpr std::array<Split, 3> kSplits{Split::Train, Split::Val, Split::Test};

std::string_view split_name(Split split);
Split split_from_name(std::string_view name);

// Axis-aligned rectangle [x0, x1) x [y0, y1) in global meters.
struct Region {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool contains(const Region& other) const;
  bool intersects(const Region& other) const;
  bool operator==(const Region&) const = default;
};

struct Provenance {
  std::string scene_id;
  raster::Origin origin;
  Split split = Split::Train;
};

struct PatchPair {
  std::string id;
  raster::RasterPatch input;   // 7 x 128 x 128 in kInputBands order
  raster::RasterPatch target;  // 6 x 128 x 128 in kTargetBands order
  Provenance provenance;
};

struct SplitEntry {
  std::vector<std::string> scenes;
  std::vector<Region> regions;
  std::vector<std::string> patches;
};

struct SplitManifest {
  std::uint64_t seed = 0;
  std::map<Split, SplitEntry> splits;

  // Split whose regions contain `footprint`; throws DataError if none does.
  Split split_of(const Region& footprint) const;
  // True when no region of one split intersects a region of another.
  bool regions_disjoint() const;
};

// Cuts co-registered scene rasters into non-overlapping HR tiles. Each input
// stack is the LR tile bicubically upsampled by lr_factor and the pan tile
// by pan_factor, clamped to [0, 1.5].
std::vector<PatchPair> make_patch_pairs(const SceneTriple& scene, const std::string& scene_id,
                                        const SplitManifest& manifest);

}  // namespace bandbridge::synthpipe
