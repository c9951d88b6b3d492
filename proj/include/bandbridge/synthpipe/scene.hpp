#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "bandbridge/raster/raster.hpp"

namespace bandbridge::synthpipe {

// Row-major 6x6 band-mixing matrix over [Blue, Green, Red, NIR, SWIR1, SWIR2].
using MixingMatrix = std::array<double, 36>;

MixingMatrix identity_mixing();
// Near-stochastic cross-talk between neighbouring bands; the default
// spectral gap between the two simulated sensors.
MixingMatrix default_mixing();

struct SceneSpec {
  std::uint64_t seed = 0;
  std::size_t size = 512;  // HR pixels per side
  MixingMatrix mixing = default_mixing();
  double blur_sigma = 1.5;  // HR pixels
  std::size_t lr_factor = 4;
  std::size_t pan_factor = 2;
  std::array<double, 4> pan_weights{0.25, 0.30, 0.30, 0.15};  // over B, G, R, NIR
  double noise_sigma = 0.005;
  int shift_dx = 0;  // LR pixels
  int shift_dy = 0;
  float hr_gsd_m = 10.0f;
  raster::Origin origin;  // scene placement in the global frame, meters

  // Throws SpecError.
  void validate() const;
};

struct SceneTriple {
  raster::RasterPatch hr;   // 6 bands at size x size
  raster::RasterPatch lr;   // 6 bands at size / lr_factor, mixed, blurred, noisy, shifted
  raster::RasterPatch pan;  // 1 band at size / pan_factor
};

// Procedural 6-band HR scene: Voronoi land-cover parcels with sharp edges,
// smooth Gaussian random fields, fine texture and sparse bright speckle,
// clipped to [0, 1.2].
raster::RasterPatch generate_hr(const SceneSpec& spec);

// LR and pan observations of `hr` under `spec`'s sensor model.
SceneTriple degrade(raster::RasterPatch hr, const SceneSpec& spec);

// generate_hr + degrade.
SceneTriple synth_scene(const SceneSpec& spec);

// Separable Gaussian blur, radius ceil(3 sigma), clamped edges; sigma 0 is identity.
raster::RasterPatch gaussian_blur(const raster::RasterPatch& patch, double sigma);

// Moves content by (dx, dy) pixels: out(x, y) = in(x - dx, y - dy), with
// clamped replication at the borders.
raster::RasterPatch shift_patch(const raster::RasterPatch& patch, int dx, int dy);

}  // namespace bandbridge::synthpipe
