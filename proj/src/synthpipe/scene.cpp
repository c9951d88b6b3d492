#include "bandbridge/synthpipe/scene.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bandbridge/core/error.hpp"
#include "bandbridge/core/random.hpp"
#include "bandbridge/raster/resample.hpp"

namespace bandbridge::synthpipe {

using raster::Band;
using raster::RasterPatch;

namespace {

constexpr std::size_t kBands = 6;
constexpr float kHrCeiling = 1.2f;

struct Cover {
  double weight;
  std::array<double, kBands> signature;
};

// Typical surface reflectances over B, G, R, NIR, SWIR1, SWIR2.
constexpr std::array<Cover, 6> kCovers{{
    {0.08, {0.06, 0.05, 0.03, 0.02, 0.01, 0.01}},  // water
    {0.20, {0.03, 0.06, 0.04, 0.35, 0.16, 0.07}},  // forest
    {0.22, {0.04, 0.09, 0.05, 0.48, 0.24, 0.11}},  // crop
    {0.15, {0.05, 0.09, 0.07, 0.32, 0.25, 0.14}},  // grassland
    {0.20, {0.12, 0.16, 0.21, 0.27, 0.36, 0.30}},  // bare soil
    {0.15, {0.15, 0.16, 0.18, 0.23, 0.27, 0.24}},  // built-up
}};

std::vector<double> normalise(std::vector<double> field) {
  double mean = 0.0;
  for (double v : field) mean += v;
  mean /= static_cast<double>(field.size());
  double var = 0.0;
  for (double v : field) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(field.size()));
  for (double& v : field) v = sd > 0.0 ? (v - mean) / sd : 0.0;
  return field;
}

// Zero-mean, unit-variance field with correlation length ~cell pixels.
std::vector<double> smooth_field(std::size_t size, std::size_t cell, Rng rng) {
  const std::size_t coarse = std::max<std::size_t>(2, size / cell);
  std::vector<float> noise(coarse * coarse);
  for (auto& v : noise) v = static_cast<float>(rng.normal());
  const RasterPatch grid({Band::Blue}, coarse, coarse, 1.0f, {}, std::move(noise));
  const auto fine = raster::bicubic_upsample(grid, size, size);
  return normalise(std::vector<double>(fine.pixels().begin(), fine.pixels().end()));
}

std::vector<double> gaussian_taps(double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : taps) v /= total;
  return taps;
}

void blur_plane(std::span<float> plane, std::size_t h, std::size_t w, const std::vector<double>& taps) {
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
  std::vector<double> rows(h * w);
  for (std::ptrdiff_t y = 0; y < H; ++y) {
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        acc += taps[static_cast<std::size_t>(k + radius)] * plane[static_cast<std::size_t>(y * W + std::clamp(x + k, std::ptrdiff_t{0}, W - 1))];
      }
      rows[static_cast<std::size_t>(y * W + x)] = acc;
    }
  }
  for (std::ptrdiff_t y = 0; y < H; ++y) {
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        acc += taps[static_cast<std::size_t>(k + radius)] * rows[static_cast<std::size_t>(std::clamp(y + k, std::ptrdiff_t{0}, H - 1) * W + x)];
      }
      plane[static_cast<std::size_t>(y * W + x)] = static_cast<float>(acc);
    }
  }
}

}  // namespace

MixingMatrix identity_mixing() {
  MixingMatrix m{};
  for (std::size_t i = 0; i < kBands; ++i) m[i * kBands + i] = 1.0;
  return m;
}

MixingMatrix default_mixing() {
  return {
      0.78, 0.16, 0.06, 0.00, 0.00, 0.00,  //
      0.08, 0.76, 0.12, 0.04, 0.00, 0.00,  //
      0.00, 0.12, 0.78, 0.10, 0.00, 0.00,  //
      0.00, 0.00, 0.18, 0.74, 0.08, 0.00,  //
      0.00, 0.00, 0.00, 0.12, 0.76, 0.12,  //
      0.00, 0.00, 0.00, 0.00, 0.18, 0.82,  //
  };
}

void SceneSpec::validate() const {
  if (size == 0 || size % 128) throw SpecError("scene size must be a positive multiple of 128, got " + std::to_string(size));
  if (lr_factor == 0 || size % lr_factor) throw SpecError("scene size not divisible by lr_factor");
  if (pan_factor == 0 || size % pan_factor) throw SpecError("scene size not divisible by pan_factor");
  for (const double m : mixing) {
    if (!(m >= -0.2 && m <= 1.2)) throw SpecError("mixing matrix entries must lie in [-0.2, 1.2]");
  }
  if (!(blur_sigma >= 0.0)) throw SpecError("blur_sigma must be >= 0");
  if (!(noise_sigma >= 0.0 && noise_sigma <= 0.05)) throw SpecError("noise_sigma must lie in [0, 0.05]");
  double total = 0.0;
  for (const double w : pan_weights) {
    if (!(w >= 0.0)) throw SpecError("pan weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw SpecError("pan weights must sum to 1");
  if (std::abs(shift_dx) > 3 || std::abs(shift_dy) > 3) throw SpecError("misregistration shift must satisfy |d| <= 3");
  if (!(hr_gsd_m > 0.0f)) throw SpecError("hr_gsd_m must be positive");
}

RasterPatch gaussian_blur(const RasterPatch& patch, double sigma) {
  if (sigma < 0.0) throw SpecError("gaussian_blur: negative sigma");
  RasterPatch out = patch;
  if (sigma == 0.0) return out;
  const auto taps = gaussian_taps(sigma);
  for (std::size_t c = 0; c < out.channels(); ++c) blur_plane(out.mutable_plane(c), out.height(), out.width(), taps);
  return out;
}

RasterPatch shift_patch(const RasterPatch& patch, int dx, int dy) {
  RasterPatch out = patch;
  const auto h = static_cast<long>(patch.height()), w = static_cast<long>(patch.width());
  for (std::size_t c = 0; c < patch.channels(); ++c) {
    const auto src = patch.plane(c);
    auto dst = out.mutable_plane(c);
    for (long y = 0; y < h; ++y) {
      const long sy = std::clamp(y - dy, 0L, h - 1);
      for (long x = 0; x < w; ++x) {
        const long sx = std::clamp(x - dx, 0L, w - 1);
        dst[static_cast<std::size_t>(y * w + x)] = src[static_cast<std::size_t>(sy * w + sx)];
      }
    }
  }
  return out;
}

RasterPatch generate_hr(const SceneSpec& spec) {
  spec.validate();
  const std::size_t s = spec.size, n = s * s;
  const Rng root(spec.seed);

  // Land-cover parcels: Voronoi cells, each with its own perturbed signature.
  Rng parcels = root.split(1);
  const std::size_t cells = (s / 128) * (s / 128) * (4 + parcels.below(4));
  std::vector<double> cx(cells), cy(cells);
  std::vector<std::array<double, kBands>> signature(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    cx[k] = parcels.uniform(0.0, static_cast<double>(s));
    cy[k] = parcels.uniform(0.0, static_cast<double>(s));
    double pick = parcels.uniform();
    std::size_t cover = 0;
    while (cover + 1 < kCovers.size() && pick >= kCovers[cover].weight) pick -= kCovers[cover++].weight;
    const double gain = 1.0 + 0.12 * parcels.normal();
    for (std::size_t b = 0; b < kBands; ++b) {
      signature[k][b] = kCovers[cover].signature[b] * gain * (1.0 + 0.05 * parcels.normal());
    }
  }

  const auto brightness = smooth_field(s, 64, root.split(2));
  const auto texture_src = smooth_field(s, 4, root.split(3));
  std::vector<std::vector<double>> band_fields;
  for (std::size_t b = 0; b < kBands; ++b) band_fields.push_back(smooth_field(s, 32, root.split(10 + b)));

  std::vector<float> pixels(kBands * n);
  for (std::size_t y = 0; y < s; ++y) {
    for (std::size_t x = 0; x < s; ++x) {
      std::size_t nearest = 0;
      double best = INFINITY;
      for (std::size_t k = 0; k < cells; ++k) {
        const double dx = cx[k] - static_cast<double>(x), dy = cy[k] - static_cast<double>(y);
        const double d = dx * dx + dy * dy;
        if (d < best) {
          best = d;
          nearest = k;
        }
      }
      const std::size_t i = y * s + x;
      const double modulation = std::max(0.3, 1.0 + 0.15 * brightness[i]) * (1.0 + 0.08 * texture_src[i]);
      for (std::size_t b = 0; b < kBands; ++b) {
        pixels[b * n + i] = static_cast<float>(signature[nearest][b] * modulation + 0.015 * band_fields[b][i]);
      }
    }
  }

  // Sparse bright 2x2 speckle (small buildings).
  Rng speckle = root.split(4);
  const std::size_t spots = n / 2000;
  constexpr std::array<double, kBands> roof{0.8, 0.9, 1.0, 0.9, 1.0, 1.0};
  for (std::size_t k = 0; k < spots; ++k) {
    const std::size_t y0 = speckle.below(s - 1), x0 = speckle.below(s - 1);
    const double lift = speckle.uniform(0.05, 0.2);
    for (std::size_t dy = 0; dy < 2; ++dy) {
      for (std::size_t dx = 0; dx < 2; ++dx) {
        for (std::size_t b = 0; b < kBands; ++b) {
          pixels[b * n + (y0 + dy) * s + x0 + dx] += static_cast<float>(lift * roof[b]);
        }
      }
    }
  }
  for (auto& v : pixels) v = std::clamp(v, 0.0f, kHrCeiling);

  return RasterPatch(std::vector<Band>(raster::kTargetBands.begin(), raster::kTargetBands.end()), s, s, spec.hr_gsd_m,
                     spec.origin, std::move(pixels));
}

SceneTriple degrade(RasterPatch hr, const SceneSpec& spec) {
  spec.validate();
  if (hr.channels() != kBands || hr.height() != spec.size || hr.width() != spec.size) {
    throw ShapeError("degrade: HR raster does not match the scene spec");
  }
  const std::size_t n = hr.plane_size();

  std::vector<float> mixed(kBands * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < kBands; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < kBands; ++c) acc += spec.mixing[r * kBands + c] * hr.pixels()[c * n + i];
      mixed[r * n + i] = static_cast<float>(acc);
    }
  }
  RasterPatch lr(hr.bands(), hr.height(), hr.width(), hr.gsd_m(), hr.origin(), std::move(mixed));
  lr = raster::area_downsample(gaussian_blur(lr, spec.blur_sigma), spec.lr_factor);
  Rng noise = Rng(spec.seed).split(100);
  for (auto& v : lr.mutable_pixels()) {
    const double noisy = spec.noise_sigma > 0.0 ? v + spec.noise_sigma * noise.normal() : v;
    v = std::clamp(static_cast<float>(noisy), 0.0f, raster::kReflectanceCeiling);
  }
  lr = shift_patch(lr, spec.shift_dx, spec.shift_dy);

  std::vector<float> pan(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t b = 0; b < spec.pan_weights.size(); ++b) acc += spec.pan_weights[b] * hr.pixels()[b * n + i];
    pan[i] = static_cast<float>(acc);
  }
  RasterPatch pan_patch({Band::Pan}, hr.height(), hr.width(), hr.gsd_m(), hr.origin(), std::move(pan));
  pan_patch = raster::area_downsample(pan_patch, spec.pan_factor);

  return SceneTriple{std::move(hr), std::move(lr), std::move(pan_patch)};
}

SceneTriple synth_scene(const SceneSpec& spec) { return degrade(generate_hr(spec), spec); }

}  // namespace bandbridge::synthpipe
