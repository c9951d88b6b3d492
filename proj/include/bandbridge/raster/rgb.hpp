#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "bandbridge/raster/raster.hpp"

namespace bandbridge::raster {

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // interleaved R, G, B
};

inline constexpr double kStretchLow = 0.02;
inline constexpr double kStretchHigh = 0.98;

// Per-channel linear stretch mapping the 2nd percentile to 0 and the 98th
// to 255. A channel whose percentiles coincide stretches over [0, p98]
// instead, so constant zero stays black and any other constant saturates.
RgbImage stretch_rgb(const RasterPatch& patch);

void write_png(const RgbImage& image, const std::filesystem::path& path);
RgbImage read_png(const std::filesystem::path& path);

// stretch_rgb + write_png. Throws DataError if Red, Green or Blue is absent.
void export_rgb(const RasterPatch& patch, const std::filesystem::path& path);

}  // namespace bandbridge::raster
