#pragma once

#include <array>
#include <cstddef>

#include "bandbridge/raster/raster.hpp"

namespace bandbridge::metrics {

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
inline constexpr double kSsimDynamicRange = 1.0;

// RMSE over every band and pixel, divided by the truth's dynamic range
// (max - min over the whole patch). Throws DataError on constant truth.
double nrmse(const raster::RasterPatch& pred, const raster::RasterPatch& truth);

// Mean over bands of the Gaussian-window SSIM map, averaged over valid
// (unpadded) window positions only.
double ssim(const raster::RasterPatch& pred, const raster::RasterPatch& truth);

// Normalised 1-D Gaussian taps of the SSIM window.
std::array<double, kSsimWindow> ssim_window();

}  // namespace bandbridge::metrics
