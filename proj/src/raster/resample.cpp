#include "bandbridge/raster/resample.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bandbridge/core/error.hpp"

namespace bandbridge::raster {

double cubic_kernel(double x, double a) {
  const double ax = std::abs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
  return 0.0;
}

std::array<double, 4> cubic_weights(double t, double a) {
  return {cubic_kernel(t + 1.0, a), cubic_kernel(t, a), cubic_kernel(1.0 - t, a), cubic_kernel(2.0 - t, a)};
}

namespace {

struct Taps {
  std::vector<std::array<std::size_t, 4>> index;
  std::vector<std::array<double, 4>> weight;
};

// Half-pixel-center mapping from `out` samples onto `in` samples.
Taps taps_for(std::size_t in, std::size_t out) {
  Taps taps;
  taps.index.resize(out);
  taps.weight.resize(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  const auto last = static_cast<long>(in) - 1;
  for (std::size_t o = 0; o < out; ++o) {
    const double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    const double base = std::floor(src);
    taps.weight[o] = cubic_weights(src - base);
    for (int k = 0; k < 4; ++k) {
      const long i = std::clamp(static_cast<long>(base) - 1 + k, 0L, last);
      taps.index[o][static_cast<std::size_t>(k)] = static_cast<std::size_t>(i);
    }
  }
  return taps;
}

}  // namespace

RasterPatch bicubic_upsample(const RasterPatch& patch, std::size_t target_height, std::size_t target_width) {
  const std::size_t h = patch.height(), w = patch.width();
  if (target_height < h || target_width < w) {
    throw ShapeError("bicubic_upsample: target " + std::to_string(target_height) + "x" + std::to_string(target_width) +
                     " is smaller than source " + std::to_string(h) + "x" + std::to_string(w));
  }
  const Taps tx = taps_for(w, target_width);
  const Taps ty = taps_for(h, target_height);
  std::vector<float> out(patch.channels() * target_height * target_width);
  std::vector<double> rows(h * target_width);
  for (std::size_t c = 0; c < patch.channels(); ++c) {
    const auto src = patch.plane(c);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < target_width; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 4; ++k) acc += tx.weight[x][k] * src[y * w + tx.index[x][k]];
        rows[y * target_width + x] = acc;
      }
    }
    float* dst = out.data() + c * target_height * target_width;
    for (std::size_t y = 0; y < target_height; ++y) {
      for (std::size_t x = 0; x < target_width; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 4; ++k) acc += ty.weight[y][k] * rows[ty.index[y][k] * target_width + x];
        dst[y * target_width + x] = static_cast<float>(acc);
      }
    }
  }
  const float gsd = patch.gsd_m() * static_cast<float>(w) / static_cast<float>(target_width);
  return RasterPatch(patch.bands(), target_height, target_width, gsd, patch.origin(), std::move(out));
}

RasterPatch area_downsample(const RasterPatch& patch, std::size_t factor) {
  if (factor == 0 || patch.height() % factor || patch.width() % factor) {
    throw ShapeError("area_downsample: " + std::to_string(patch.height()) + "x" + std::to_string(patch.width()) +
                     " not divisible by factor " + std::to_string(factor));
  }
  const std::size_t h = patch.height() / factor, w = patch.width() / factor;
  const double cell = static_cast<double>(factor * factor);
  std::vector<float> out(patch.channels() * h * w);
  for (std::size_t c = 0; c < patch.channels(); ++c) {
    const auto src = patch.plane(c);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::size_t dy = 0; dy < factor; ++dy) {
          for (std::size_t dx = 0; dx < factor; ++dx) acc += src[(y * factor + dy) * patch.width() + x * factor + dx];
        }
        out[(c * h + y) * w + x] = static_cast<float>(acc / cell);
      }
    }
  }
  return RasterPatch(patch.bands(), h, w, patch.gsd_m() * static_cast<float>(factor), patch.origin(), std::move(out));
}

}  // namespace bandbridge::raster
