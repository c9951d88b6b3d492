#include "bandbridge/raster/rgb.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>

#include "bandbridge/core/error.hpp"
#include "bandbridge/core/stats.hpp"

namespace bandbridge::raster {

RgbImage stretch_rgb(const RasterPatch& patch) {
  const std::array<Band, 3> order{Band::Red, Band::Green, Band::Blue};
  RgbImage image{patch.width(), patch.height(), std::vector<std::uint8_t>(patch.plane_size() * 3)};
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto channel = patch.channel_of(order[k]);
    if (!channel) throw DataError("export_rgb: patch has no " + std::string(band_name(order[k])) + " band");
    const auto plane = patch.plane(*channel);
    std::vector<double> sorted(plane.begin(), plane.end());
    std::sort(sorted.begin(), sorted.end());
    double lo = quantile_sorted(sorted, kStretchLow);
    const double hi = quantile_sorted(sorted, kStretchHigh);
    if (!(hi > lo)) lo = 0.0;
    const double range = hi - lo;
    for (std::size_t i = 0; i < plane.size(); ++i) {
      double v = 0.0;
      if (range > 0.0) v = std::clamp((static_cast<double>(plane[i]) - lo) / range, 0.0, 1.0);
      image.pixels[3 * i + k] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return image;
}

namespace {
struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;
}  // namespace

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  File file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError(IoError::Kind::Open, "cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError(IoError::Kind::Write, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(IoError::Kind::Write, "libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.pixels.data() + y * image.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

RgbImage read_png(const std::filesystem::path& path) {
  File file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError(IoError::Kind::Open, "cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(IoError::Kind::Open, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(IoError::Kind::CorruptHeader, "libpng failed reading " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_RGB || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(IoError::Kind::CorruptHeader, "expected 8-bit RGB PNG: " + path.string());
  }
  RgbImage image;
  image.width = png_get_image_width(png, info);
  image.height = png_get_image_height(png, info);
  image.pixels.resize(image.width * image.height * 3);
  for (std::size_t y = 0; y < image.height; ++y) png_read_row(png, image.pixels.data() + y * image.width * 3, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void export_rgb(const RasterPatch& patch, const std::filesystem::path& path) { write_png(stretch_rgb(patch), path); }

}  // namespace bandbridge::raster
