#pragma once

#include "bandbridge/raster/raster.hpp"

namespace bandbridge::synthpipe {

struct Shift {
  int dx = 0;
  int dy = 0;
  bool operator==(const Shift&) const = default;
};

struct Coregistration {
  raster::RasterPatch corrected;
  Shift shift;        // displacement detected in `lr`
  double score = 0;   // normalised cross-correlation at `shift`
};

inline constexpr int kSearchRadius = 3;

// Integer-shift registration of `lr` against `reference` (typically the HR
// scene). The reference Green band is area-downsampled onto the LR grid and
// the shift maximising normalised cross-correlation over the interior is
// chosen; ties go to the smallest |dx| + |dy|, then lexicographic (dx, dy).
// Throws DataError when the correlation surface is degenerate.
Coregistration coregister(const raster::RasterPatch& lr, const raster::RasterPatch& reference,
                          int search = kSearchRadius);

}  // namespace bandbridge::synthpipe
