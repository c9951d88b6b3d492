#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bandbridge/core/error.hpp"
#include "bandbridge/raster/patch_io.hpp"
#include "bandbridge/raster/resample.hpp"
#include "bandbridge/raster/rgb.hpp"
#include "bandbridge/selftest/oracles.hpp"
#include "test_util.hpp"

using namespace bandbridge;
using raster::Band;
using raster::RasterPatch;

TEST(Raster, ConstructorValidatesPixelCount) {
  EXPECT_THROW(RasterPatch({Band::Blue}, 2, 2, 10.0f, {}, std::vector<float>(3)), ShapeError);
  EXPECT_THROW(RasterPatch({}, 2, 2, 10.0f, {}, {}), ShapeError);
}

TEST(Raster, SelectReordersBands) {
  const auto p = selftest::random_patch(1, 3, 4, 4);
  const Band order[] = {Band::Red, Band::Blue};
  const auto s = p.select(order);
  EXPECT_EQ(s.bands(), (std::vector<Band>{Band::Red, Band::Blue}));
  EXPECT_EQ(s.at(0, 1, 2), p.at(2, 1, 2));
  EXPECT_EQ(s.at(1, 3, 0), p.at(0, 3, 0));
  const Band missing[] = {Band::NIR};
  EXPECT_THROW(p.select(missing), DataError);
}

TEST(Bicubic, PreservesConstants) {
  auto p = selftest::random_patch(2, 2, 8, 8);
  for (auto& v : p.mutable_pixels()) v = 0.3f;
  const auto up = raster::bicubic_upsample(p, 32, 32);
  for (const float v : up.pixels()) EXPECT_NEAR(v, 0.3f, 1e-6);
  EXPECT_FLOAT_EQ(up.gsd_m(), p.gsd_m() / 4.0f);
}

TEST(Bicubic, ReproducesLinearRampInInterior) {
  RasterPatch ramp = selftest::random_patch(3, 1, 1, 16);
  for (std::size_t x = 0; x < 16; ++x) ramp.mutable_pixels()[x] = static_cast<float>(x);
  const auto up = raster::bicubic_upsample(ramp, 1, 64);
  // Output x sits at input coordinate (x + 0.5) / 4 - 0.5; away from the
  // clamped borders the kernel reproduces the line exactly.
  for (std::size_t x = 8; x < 56; ++x) {
    EXPECT_NEAR(up.at(0, 0, x), (static_cast<double>(x) + 0.5) / 4.0 - 0.5, 1e-5);
  }
}

TEST(Bicubic, MatchesSeparableOracle) {
  const auto p = selftest::random_patch(4, 1, 6, 5);
  const auto up = raster::bicubic_upsample(p, 12, 10);
  const auto clamp = [](long v, long n) { return std::clamp(v, 0L, n - 1); };
  for (long y = 0; y < 12; ++y) {
    for (long x = 0; x < 10; ++x) {
      const double sy = (y + 0.5) / 2.0 - 0.5, sx = (x + 0.5) / 2.0 - 0.5;
      const long y0 = static_cast<long>(std::floor(sy)), x0 = static_cast<long>(std::floor(sx));
      const auto wy = selftest::catmull_rom_taps(sy - y0), wx = selftest::catmull_rom_taps(sx - x0);
      double acc = 0.0;
      for (long i = 0; i < 4; ++i) {
        for (long j = 0; j < 4; ++j) {
          acc += wy[i] * wx[j] * p.at(0, clamp(y0 - 1 + i, 6), clamp(x0 - 1 + j, 5));
        }
      }
      EXPECT_NEAR(up.at(0, y, x), acc, 1e-6);
    }
  }
}

TEST(Bicubic, RejectsDownscaling) {
  const auto p = selftest::random_patch(5, 1, 8, 8);
  EXPECT_THROW(raster::bicubic_upsample(p, 4, 8), ShapeError);
}

TEST(AreaDownsample, AveragesBlocks) {
  const auto p = selftest::random_patch(6, 2, 8, 12);
  const auto d = raster::area_downsample(p, 4);
  ASSERT_EQ(d.height(), 2u);
  ASSERT_EQ(d.width(), 3u);
  double acc = 0.0;
  for (std::size_t y = 4; y < 8; ++y) {
    for (std::size_t x = 8; x < 12; ++x) acc += p.at(1, y, x);
  }
  EXPECT_NEAR(d.at(1, 1, 2), acc / 16.0, 1e-6);
  EXPECT_FLOAT_EQ(d.gsd_m(), p.gsd_m() * 4.0f);
  EXPECT_THROW(raster::area_downsample(p, 5), ShapeError);
}

TEST(PatchIo, StreamRoundTripIsBitwise) {
  auto p = selftest::random_patch(7, 7, 16, 12);
  p = RasterPatch(p.bands(), p.height(), p.width(), 12.5f, {1280.0f, -640.0f},
                  std::vector<float>(p.pixels().begin(), p.pixels().end()));
  std::stringstream first;
  raster::write_patch(p, first);
  EXPECT_EQ(first.str().size(), raster::encoded_size(p));
  EXPECT_EQ(first.str().size(), raster::kPatchHeaderBytes + 7u * 16 * 12 * 4);
  const auto back = raster::read_patch(first);
  EXPECT_EQ(back, p);
  std::stringstream second;
  raster::write_patch(back, second);
  EXPECT_EQ(first.str(), second.str());
}

TEST(PatchIo, HeaderLayout) {
  const auto p = selftest::random_patch(8, 2, 3, 5);
  std::stringstream s;
  raster::write_patch(p, s);
  const std::string bytes = s.str();
  EXPECT_EQ(bytes.substr(0, 4), "BBP1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);  // version, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 2u);  // band count
  EXPECT_EQ(static_cast<unsigned char>(bytes[7]), 1u);  // Blue
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2u);  // Green
  EXPECT_EQ(static_cast<unsigned char>(bytes[14]), 3u);  // height
  EXPECT_EQ(static_cast<unsigned char>(bytes[18]), 5u);  // width
}

TEST(PatchIo, CorruptionIsReportedByKind) {
  const auto p = selftest::random_patch(9, 1, 4, 4);
  std::stringstream s;
  raster::write_patch(p, s);
  const std::string good = s.str();
  const auto kind_of = [](const std::string& bytes) {
    std::stringstream in(bytes);
    try {
      raster::read_patch(in);
    } catch (const IoError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no error";
    return IoError::Kind::Open;
  };
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of(bad_magic), IoError::Kind::CorruptHeader);
  std::string bad_version = good;
  bad_version[4] = 9;
  EXPECT_EQ(kind_of(bad_version), IoError::Kind::UnknownVersion);
  EXPECT_EQ(kind_of(good.substr(0, good.size() - 3)), IoError::Kind::TruncatedPayload);
  EXPECT_EQ(kind_of(good.substr(0, 20)), IoError::Kind::CorruptHeader);
}

TEST(PatchIo, PairFileRoundTrip) {
  TempDir dir;
  const auto input = selftest::random_patch(10, 7, 8, 8), target = selftest::random_patch(11, 6, 8, 8);
  raster::write_pair(input, target, dir.path / "pair.bbp");
  const auto [a, b] = raster::read_pair(dir.path / "pair.bbp");
  EXPECT_EQ(a, input);
  EXPECT_EQ(b, target);
  EXPECT_THROW(raster::read_patch(dir.path / "pair.bbp"), IoError);  // trailing record
  EXPECT_THROW(raster::read_pair(dir.path / "absent.bbp"), IoError);
}

TEST(Rgb, StretchMapsPercentilesAndHandlesConstants) {
  auto p = selftest::random_patch(12, 3, 10, 10);
  const auto img = raster::stretch_rgb(p);
  EXPECT_EQ(img.pixels.size(), 300u);
  std::size_t zeros = 0, full = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    zeros += img.pixels[i * 3] == 0;
    full += img.pixels[i * 3] == 255;
  }
  EXPECT_GE(zeros, 2u);
  EXPECT_GE(full, 2u);

  for (auto& v : p.mutable_pixels()) v = 0.0f;
  for (const auto v : raster::stretch_rgb(p).pixels) EXPECT_EQ(v, 0);
  for (auto& v : p.mutable_pixels()) v = 0.4f;
  for (const auto v : raster::stretch_rgb(p).pixels) EXPECT_EQ(v, 255);
}

TEST(Rgb, PngRoundTripAndMissingBands) {
  TempDir dir;
  const auto p = selftest::random_patch(13, 7, 9, 11);
  raster::export_rgb(p, dir.path / "x.png");
  const auto back = raster::read_png(dir.path / "x.png");
  const auto direct = raster::stretch_rgb(p);
  EXPECT_EQ(back.width, 11u);
  EXPECT_EQ(back.height, 9u);
  EXPECT_EQ(back.pixels, direct.pixels);
  const Band nir[] = {Band::NIR};
  EXPECT_THROW(raster::export_rgb(p.select(nir), dir.path / "y.png"), DataError);
}
