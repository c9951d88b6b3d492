#include "bandbridge/raster/raster.hpp"

#include <algorithm>
#include <string>

#include "bandbridge/core/error.hpp"

namespace bandbridge::raster {

std::string_view band_name(Band band) {
  switch (band) {
    case Band::Blue: return "Blue";
    case Band::Green: return "Green";
    case Band::Red: return "Red";
    case Band::NIR: return "NIR";
    case Band::SWIR1: return "SWIR1";
    case Band::SWIR2: return "SWIR2";
    case Band::Pan: return "Pan";
  }
  return "?";
}

std::optional<Band> band_from_code(std::uint8_t code) {
  if (code < 1 || code > 7) return std::nullopt;
  return static_cast<Band>(code);
}

RasterPatch::RasterPatch(std::vector<Band> bands, std::size_t height, std::size_t width, float gsd_m, Origin origin,
                         std::vector<float> pixels)
    : bands_(std::move(bands)), height_(height), width_(width), gsd_m_(gsd_m), origin_(origin),
      pixels_(std::move(pixels)) {
  if (bands_.empty() || height_ == 0 || width_ == 0) {
    throw ShapeError("raster patch needs at least one band and positive extents");
  }
  if (pixels_.size() != bands_.size() * height_ * width_) {
    throw ShapeError("raster patch pixel count " + std::to_string(pixels_.size()) + " does not match " +
                     std::to_string(bands_.size()) + "x" + std::to_string(height_) + "x" + std::to_string(width_));
  }
}

RasterPatch RasterPatch::zeros(std::vector<Band> bands, std::size_t height, std::size_t width, float gsd_m,
                               Origin origin) {
  const std::size_t n = bands.size() * height * width;
  return RasterPatch(std::move(bands), height, width, gsd_m, origin, std::vector<float>(n, 0.0f));
}

std::span<const float> RasterPatch::plane(std::size_t channel) const {
  if (channel >= channels()) throw ShapeError("channel " + std::to_string(channel) + " out of range");
  return std::span<const float>(pixels_).subspan(channel * plane_size(), plane_size());
}

std::span<float> RasterPatch::mutable_plane(std::size_t channel) {
  if (channel >= channels()) throw ShapeError("channel " + std::to_string(channel) + " out of range");
  return std::span<float>(pixels_).subspan(channel * plane_size(), plane_size());
}

std::optional<std::size_t> RasterPatch::channel_of(Band band) const {
  const auto it = std::find(bands_.begin(), bands_.end(), band);
  if (it == bands_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - bands_.begin());
}

RasterPatch RasterPatch::select(std::span<const Band> bands) const {
  std::vector<float> out;
  out.reserve(bands.size() * plane_size());
  for (const Band b : bands) {
    const auto c = channel_of(b);
    if (!c) throw DataError("band " + std::string(band_name(b)) + " not present in patch");
    const auto p = plane(*c);
    out.insert(out.end(), p.begin(), p.end());
  }
  return RasterPatch(std::vector<Band>(bands.begin(), bands.end()), height_, width_, gsd_m_, origin_, std::move(out));
}

bool RasterPatch::in_reflectance_range() const {
  return std::all_of(pixels_.begin(), pixels_.end(), [](float v) { return v >= 0.0f && v <= kReflectanceCeiling; });
}

}  // namespace bandbridge::raster
