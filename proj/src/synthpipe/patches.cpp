#include "bandbridge/synthpipe/patches.hpp"

#include <algorithm>
#include <cstdio>

#include "bandbridge/core/error.hpp"
#include "bandbridge/raster/resample.hpp"

namespace bandbridge::synthpipe {

using raster::Band;
using raster::RasterPatch;

std::string_view split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_name(std::string_view name) {
  for (const Split s : kSplits) {
    if (split_name(s) == name) return s;
  }
  throw SpecError("unknown split '" + std::string(name) + "' (expected train, val or test)");
}

bool Region::contains(const Region& other) const {
  return other.x0 >= x0 && other.y0 >= y0 && other.x1 <= x1 && other.y1 <= y1;
}

bool Region::intersects(const Region& other) const {
  return x0 < other.x1 && other.x0 < x1 && y0 < other.y1 && other.y0 < y1;
}

Split SplitManifest::split_of(const Region& footprint) const {
  for (const auto& [split, entry] : splits) {
    for (const auto& region : entry.regions) {
      if (region.contains(footprint)) return split;
    }
  }
  throw DataError("footprint is not inside any split region");
}

bool SplitManifest::regions_disjoint() const {
  for (auto a = splits.begin(); a != splits.end(); ++a) {
    for (auto b = std::next(a); b != splits.end(); ++b) {
      for (const auto& ra : a->second.regions) {
        for (const auto& rb : b->second.regions) {
          if (ra.intersects(rb)) return false;
        }
      }
    }
  }
  return true;
}

namespace {

RasterPatch crop(const RasterPatch& patch, std::size_t y0, std::size_t x0, std::size_t size) {
  std::vector<float> pixels(patch.channels() * size * size);
  for (std::size_t c = 0; c < patch.channels(); ++c) {
    const auto src = patch.plane(c);
    for (std::size_t y = 0; y < size; ++y) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((y0 + y) * patch.width() + x0), size,
                  pixels.begin() + static_cast<std::ptrdiff_t>((c * size + y) * size));
    }
  }
  const float gsd = patch.gsd_m();
  const raster::Origin origin{patch.origin().x + static_cast<float>(x0) * gsd,
                              patch.origin().y + static_cast<float>(y0) * gsd};
  return RasterPatch(patch.bands(), size, size, gsd, origin, std::move(pixels));
}

}  // namespace

std::vector<PatchPair> make_patch_pairs(const SceneTriple& scene, const std::string& scene_id,
                                        const SplitManifest& manifest) {
  const auto& hr = scene.hr;
  if (hr.height() % kPatchSize || hr.width() % kPatchSize) {
    throw ShapeError("make_patch_pairs: scene size must be a multiple of " + std::to_string(kPatchSize));
  }
  const std::size_t lr_factor = hr.height() / scene.lr.height();
  const std::size_t pan_factor = hr.height() / scene.pan.height();
  if (lr_factor * scene.lr.height() != hr.height() || pan_factor * scene.pan.height() != hr.height() ||
      kPatchSize % lr_factor || kPatchSize % pan_factor) {
    throw ShapeError("make_patch_pairs: LR/pan grids do not tile the HR patch size");
  }

  const std::size_t rows = hr.height() / kPatchSize, cols = hr.width() / kPatchSize;
  std::vector<PatchPair> pairs;
  for (std::size_t ty = 0; ty < rows; ++ty) {
    for (std::size_t tx = 0; tx < cols; ++tx) {
      const std::size_t tile = ty * cols + tx;
      RasterPatch target = crop(hr, ty * kPatchSize, tx * kPatchSize, kPatchSize);
      const RasterPatch lr = crop(scene.lr, ty * kPatchSize / lr_factor, tx * kPatchSize / lr_factor,
                                  kPatchSize / lr_factor);
      const RasterPatch pan = crop(scene.pan, ty * kPatchSize / pan_factor, tx * kPatchSize / pan_factor,
                                   kPatchSize / pan_factor);
      const RasterPatch lr_up = raster::bicubic_upsample(lr, kPatchSize, kPatchSize);
      const RasterPatch pan_up = raster::bicubic_upsample(pan, kPatchSize, kPatchSize);

      std::vector<float> stack(lr_up.pixels().begin(), lr_up.pixels().end());
      stack.insert(stack.end(), pan_up.pixels().begin(), pan_up.pixels().end());
      for (auto& v : stack) v = std::clamp(v, 0.0f, raster::kReflectanceCeiling);
      RasterPatch input(std::vector<Band>(raster::kInputBands.begin(), raster::kInputBands.end()), kPatchSize,
                        kPatchSize, target.gsd_m(), target.origin(), std::move(stack));

      const double extent = static_cast<double>(kPatchSize) * target.gsd_m();
      const Region footprint{target.origin().x, target.origin().y, target.origin().x + extent,
                             target.origin().y + extent};
      char id[16];
      std::snprintf(id, sizeof id, "_t%02zu", tile);
      Provenance provenance{scene_id, target.origin(), manifest.split_of(footprint)};
      pairs.push_back(PatchPair{scene_id + id, std::move(input), std::move(target), std::move(provenance)});
    }
  }
  return pairs;
}

}  // namespace bandbridge::synthpipe
