#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bandbridge/autograd/tensor.hpp"
#include "bandbridge/raster/raster.hpp"
#include "bandbridge/synthpipe/patches.hpp"

namespace bandbridge::harness {

struct SplitData {
  synthpipe::Split split = synthpipe::Split::Train;
  std::vector<std::string> ids;  // manifest order (sorted)
  std::vector<raster::RasterPatch> inputs;
  std::vector<raster::RasterPatch> targets;

  std::size_t size() const noexcept { return ids.size(); }
};

// Throws DataError when the manifest or a listed pair file is missing.
SplitData load_split(const std::filesystem::path& root, synthpipe::Split split);

// Stacks the selected patches into one [N, C, H, W] tensor.
ag::Tensorf stack(std::span<const raster::RasterPatch> patches, std::span<const std::size_t> indices);
ag::Tensorf to_tensor(const raster::RasterPatch& patch);

}  // namespace bandbridge::harness
