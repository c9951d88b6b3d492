#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bandbridge/autograd/ops.hpp"
#include "bandbridge/raster/raster.hpp"

namespace bandbridge::selftest {

// Direct double-precision definitions, written independently of the
// production code paths.

// 11x11 Gaussian (sigma 1.5) weights built as one 2-D kernel, SSIM
// averaged over every valid window position and band.
double naive_ssim(const raster::RasterPatch& pred, const raster::RasterPatch& truth);
double naive_nrmse(const raster::RasterPatch& pred, const raster::RasterPatch& truth);

// SSIM of a constant image c against constant c + d.
double constant_shift_ssim(double c, double d);

// Catmull-Rom taps at offsets -1, 0, 1, 2 for fractional phase t, from the
// piecewise cubic written out per interval.
std::array<double, 4> catmull_rom_taps(double t);

// Nested-loop cross-correlation on [N, Cin, H, W] with [Cout, Cin, k, k].
std::vector<double> naive_conv2d(const std::vector<double>& input, const ag::Shape& input_shape,
                                 const std::vector<double>& weight, const ag::Shape& weight_shape,
                                 const std::vector<double>& bias, const ag::Conv2dOptions& options);

// Patch of the given shape with uniform values in [lo, hi).
raster::RasterPatch random_patch(std::uint64_t seed, std::size_t channels, std::size_t height, std::size_t width,
                                 double lo = 0.0, double hi = 1.0);

}  // namespace bandbridge::selftest
