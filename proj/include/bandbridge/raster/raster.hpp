#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace bandbridge::raster {

// Codes double as the on-disk band identifiers.
enum class Band : std::uint8_t { Blue = 1, Green = 2, Red = 3, NIR = 4, SWIR1 = 5, SWIR2 = 6, Pan = 7 };

inline constexpr std::array<Band, 7> kInputBands{Band::Blue, Band::Green, Band::Red, Band::NIR,
                                                 Band::SWIR1, Band::SWIR2, Band::Pan};
inline constexpr std::array<Band, 6> kTargetBands{Band::Blue, Band::Green, Band::Red,
                                                  Band::NIR,  Band::SWIR1, Band::SWIR2};

inline constexpr float kReflectanceCeiling = 1.5f;

std::string_view band_name(Band band);
std::optional<Band> band_from_code(std::uint8_t code);

struct Origin {
  float x = 0.0f;
  float y = 0.0f;
  bool operator==(const Origin&) const = default;
};

// C x H x W tile of reflectance-like values with band semantics.
class RasterPatch {
 public:
  RasterPatch() = default;
  RasterPatch(std::vector<Band> bands, std::size_t height, std::size_t width, float gsd_m, Origin origin,
              std::vector<float> pixels);

  static RasterPatch zeros(std::vector<Band> bands, std::size_t height, std::size_t width, float gsd_m,
                           Origin origin = {});

  const std::vector<Band>& bands() const noexcept { return bands_; }
  std::size_t channels() const noexcept { return bands_.size(); }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  float gsd_m() const noexcept { return gsd_m_; }
  Origin origin() const noexcept { return origin_; }

  std::span<const float> pixels() const noexcept { return pixels_; }
  std::span<float> mutable_pixels() noexcept { return pixels_; }
  std::span<const float> plane(std::size_t channel) const;
  std::span<float> mutable_plane(std::size_t channel);
  float at(std::size_t channel, std::size_t y, std::size_t x) const {
    return pixels_[(channel * height_ + y) * width_ + x];
  }

  std::optional<std::size_t> channel_of(Band band) const;
  // Sub-patch holding the requested bands in the requested order.
  RasterPatch select(std::span<const Band> bands) const;

  // Every pixel in [0, kReflectanceCeiling].
  bool in_reflectance_range() const;

  bool operator==(const RasterPatch&) const = default;

 private:
  std::vector<Band> bands_;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  float gsd_m_ = 0.0f;
  Origin origin_;
  std::vector<float> pixels_;
};

}  // namespace bandbridge::raster
