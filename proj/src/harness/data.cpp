#include "bandbridge/harness/data.hpp"

#include <algorithm>

#include "bandbridge/core/error.hpp"
#include "bandbridge/raster/patch_io.hpp"
#include "bandbridge/synthpipe/dataset.hpp"

namespace bandbridge::harness {

SplitData load_split(const std::filesystem::path& root, synthpipe::Split split) {
  if (!std::filesystem::exists(root / "manifest.json")) {
    throw DataError("no dataset at " + root.string() + " (manifest.json missing)");
  }
  const auto manifest = synthpipe::read_manifest(root);
  const auto entry = manifest.splits.find(split);
  if (entry == manifest.splits.end() || entry->second.patches.empty()) {
    throw DataError("dataset " + root.string() + " has no '" + std::string(synthpipe::split_name(split)) + "' patches");
  }
  SplitData data;
  data.split = split;
  data.ids = entry->second.patches;
  for (const auto& id : data.ids) {
    const auto path = synthpipe::pair_path(root, split, id);
    if (!std::filesystem::exists(path)) throw DataError("missing pair file " + path.string());
    auto [input, target] = raster::read_pair(path);
    data.inputs.push_back(std::move(input));
    data.targets.push_back(std::move(target));
  }
  return data;
}

ag::Tensorf stack(std::span<const raster::RasterPatch> patches, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("stack: no patches selected");
  const auto& first = patches[indices.front()];
  const std::size_t c = first.channels(), h = first.height(), w = first.width();
  std::vector<float> values;
  values.reserve(indices.size() * c * h * w);
  for (const std::size_t i : indices) {
    const auto& p = patches[i];
    if (p.channels() != c || p.height() != h || p.width() != w) throw ShapeError("stack: patches differ in shape");
    values.insert(values.end(), p.pixels().begin(), p.pixels().end());
  }
  return ag::Tensorf(ag::Shape{indices.size(), c, h, w}, std::move(values));
}

ag::Tensorf to_tensor(const raster::RasterPatch& patch) {
  const std::size_t index = 0;
  return stack(std::span<const raster::RasterPatch>(&patch, 1), std::span<const std::size_t>(&index, 1));
}

}  // namespace bandbridge::harness
