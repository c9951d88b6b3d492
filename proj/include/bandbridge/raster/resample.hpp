#pragma once

#include <array>
#include <cstddef>

#include "bandbridge/raster/raster.hpp"

namespace bandbridge::raster {

inline constexpr double kCatmullRom = -0.5;

// Keys cubic convolution kernel W(x) with parameter a.
double cubic_kernel(double x, double a = kCatmullRom);

// Weights of taps at offsets -1, 0, +1, +2 for a sample at fractional
// phase t in [0, 1) past the 0 tap.
std::array<double, 4> cubic_weights(double t, double a = kCatmullRom);

// Separable Catmull-Rom resampling with half-pixel centers and edge
// clamping. Target extents must not be smaller than the source.
RasterPatch bicubic_upsample(const RasterPatch& patch, std::size_t target_height, std::size_t target_width);

// Block means over factor x factor cells.
RasterPatch area_downsample(const RasterPatch& patch, std::size_t factor);

}  // namespace bandbridge::raster
