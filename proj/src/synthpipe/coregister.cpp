#include "bandbridge/synthpipe/coregister.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <tuple>
#include <vector>

#include "bandbridge/core/error.hpp"
#include "bandbridge/raster/resample.hpp"
#include "bandbridge/synthpipe/scene.hpp"

namespace bandbridge::synthpipe {

using raster::Band;
using raster::RasterPatch;

namespace {

// NCC between lr(x, y) and ref(x - dx, y - dy) over the interior.
double correlation(std::span<const float> lr, std::span<const float> ref, long h, long w, long margin, int dx,
                   int dy) {
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  long count = 0;
  for (long y = margin; y < h - margin; ++y) {
    for (long x = margin; x < w - margin; ++x) {
      const double a = lr[static_cast<std::size_t>(y * w + x)];
      const double b = ref[static_cast<std::size_t>((y - dy) * w + (x - dx))];
      sa += a;
      sb += b;
      saa += a * a;
      sbb += b * b;
      sab += a * b;
      ++count;
    }
  }
  const double n = static_cast<double>(count);
  const double cov = sab - sa * sb / n;
  const double va = saa - sa * sa / n, vb = sbb - sb * sb / n;
  if (va <= 1e-12 * saa || vb <= 1e-12 * sbb) return NAN;
  return cov / std::sqrt(va * vb);
}

}  // namespace

Coregistration coregister(const RasterPatch& lr, const RasterPatch& reference, int search) {
  if (search < 0) throw SpecError("coregister: negative search radius");
  const auto lr_green = lr.channel_of(Band::Green);
  const auto ref_green = reference.channel_of(Band::Green);
  if (!lr_green || !ref_green) throw DataError("coregister: both rasters need a Green band");
  if (lr.height() == 0 || reference.height() % lr.height() || reference.width() % lr.width() ||
      reference.height() / lr.height() != reference.width() / lr.width()) {
    throw ShapeError("coregister: reference grid is not an integer multiple of the LR grid");
  }
  const std::size_t factor = reference.height() / lr.height();
  const Band green[] = {Band::Green};
  const RasterPatch ref = raster::area_downsample(reference.select(green), factor);

  const long h = static_cast<long>(lr.height()), w = static_cast<long>(lr.width());
  if (h <= 2L * search || w <= 2L * search) throw ShapeError("coregister: raster smaller than the search window");

  std::vector<std::tuple<int, int, int>> candidates;
  for (int dx = -search; dx <= search; ++dx) {
    for (int dy = -search; dy <= search; ++dy) candidates.emplace_back(std::abs(dx) + std::abs(dy), dx, dy);
  }
  std::sort(candidates.begin(), candidates.end());

  Shift best;
  double best_score = -INFINITY;
  for (const auto& [manhattan, dx, dy] : candidates) {
    const double score = correlation(lr.plane(*lr_green), ref.plane(0), h, w, search, dx, dy);
    if (std::isnan(score)) continue;
    if (score > best_score + 1e-12) {
      best_score = score;
      best = {dx, dy};
    }
  }
  if (!std::isfinite(best_score)) throw DataError("coregister: correlation surface is degenerate (constant band)");

  return Coregistration{shift_patch(lr, -best.dx, -best.dy), best, best_score};
}

}  // namespace bandbridge::synthpipe
