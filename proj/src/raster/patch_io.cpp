#include "bandbridge/raster/patch_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "bandbridge/core/error.hpp"

namespace bandbridge::raster {

namespace {

constexpr std::array<char, 4> kMagic{'B', 'B', 'P', '1'};
constexpr std::size_t kMaxBands = 7;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename U>
void put_le(std::uint8_t* dst, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) dst[i] = static_cast<std::uint8_t>(value >> (8 * i));
}

template <typename U>
U get_le(const std::uint8_t* src) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<U>(src[i]) << (8 * i));
  return value;
}

void put_f32(std::uint8_t* dst, float v) { put_le<std::uint32_t>(dst, std::bit_cast<std::uint32_t>(v)); }
float get_f32(const std::uint8_t* src) { return std::bit_cast<float>(get_le<std::uint32_t>(src)); }

}  // namespace

std::size_t encoded_size(const RasterPatch& patch) { return kPatchHeaderBytes + patch.pixels().size() * 4; }

void write_patch(const RasterPatch& patch, std::ostream& out) {
  if (patch.channels() > kMaxBands) throw IoError(IoError::Kind::Write, "BBP1 holds at most 7 bands");
  std::array<std::uint8_t, kPatchHeaderBytes> header{};
  std::memcpy(header.data(), kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(&header[4], kPatchVersion);
  header[6] = static_cast<std::uint8_t>(patch.channels());
  for (std::size_t i = 0; i < patch.channels(); ++i) header[7 + i] = static_cast<std::uint8_t>(patch.bands()[i]);
  put_le<std::uint32_t>(&header[14], static_cast<std::uint32_t>(patch.height()));
  put_le<std::uint32_t>(&header[18], static_cast<std::uint32_t>(patch.width()));
  put_f32(&header[22], patch.gsd_m());
  put_f32(&header[26], patch.origin().x);
  put_f32(&header[30], patch.origin().y);
  out.write(reinterpret_cast<const char*>(header.data()), header.size());

  const auto px = patch.pixels();
  std::vector<std::uint8_t> payload(px.size() * 4);
  for (std::size_t i = 0; i < px.size(); ++i) put_f32(&payload[4 * i], px[i]);
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError(IoError::Kind::Write, "failed writing BBP1 record");
}

RasterPatch read_patch(std::istream& in) {
  std::array<std::uint8_t, kPatchHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header.size())) {
    throw IoError(IoError::Kind::CorruptHeader, "BBP1 header truncated");
  }
  if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) {
    throw IoError(IoError::Kind::CorruptHeader, "bad BBP1 magic");
  }
  const auto version = get_le<std::uint16_t>(&header[4]);
  if (version != kPatchVersion) {
    throw IoError(IoError::Kind::UnknownVersion, "unsupported BBP1 version " + std::to_string(version));
  }
  const std::size_t count = header[6];
  if (count == 0 || count > kMaxBands) {
    throw IoError(IoError::Kind::CorruptHeader, "invalid band count " + std::to_string(count));
  }
  std::vector<Band> bands;
  for (std::size_t i = 0; i < kMaxBands; ++i) {
    const std::uint8_t code = header[7 + i];
    if (i >= count) {
      if (code != 0) throw IoError(IoError::Kind::CorruptHeader, "nonzero band-code padding");
      continue;
    }
    const auto band = band_from_code(code);
    if (!band) throw IoError(IoError::Kind::CorruptHeader, "unknown band code " + std::to_string(code));
    bands.push_back(*band);
  }
  const std::size_t h = get_le<std::uint32_t>(&header[14]);
  const std::size_t w = get_le<std::uint32_t>(&header[18]);
  if (h == 0 || w == 0) throw IoError(IoError::Kind::CorruptHeader, "zero raster extent");
  const float gsd = get_f32(&header[22]);
  const Origin origin{get_f32(&header[26]), get_f32(&header[30])};

  const std::size_t n = count * h * w;
  std::vector<std::uint8_t> payload(n * 4);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (in.gcount() != static_cast<std::streamsize>(payload.size())) {
    throw IoError(IoError::Kind::TruncatedPayload, "BBP1 payload truncated: expected " +
                                                       std::to_string(payload.size()) + " bytes, got " +
                                                       std::to_string(in.gcount()));
  }
  std::vector<float> pixels(n);
  for (std::size_t i = 0; i < n; ++i) pixels[i] = get_f32(&payload[4 * i]);
  return RasterPatch(std::move(bands), h, w, gsd, origin, std::move(pixels));
}

void write_patch(const RasterPatch& patch, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::Open, "cannot open " + path.string() + " for writing");
  write_patch(patch, out);
}

namespace {
std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::Open, "cannot open " + path.string());
  return in;
}

void expect_eof(std::istream& in, const std::filesystem::path& path) {
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IoError(IoError::Kind::CorruptHeader, "trailing bytes after BBP1 record in " + path.string());
  }
}
}  // namespace

RasterPatch read_patch(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  RasterPatch patch = read_patch(in);
  expect_eof(in, path);
  return patch;
}

void write_pair(const RasterPatch& input, const RasterPatch& target, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::Open, "cannot open " + path.string() + " for writing");
  write_patch(input, out);
  write_patch(target, out);
}

std::pair<RasterPatch, RasterPatch> read_pair(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  RasterPatch input = read_patch(in);
  RasterPatch target = read_patch(in);
  expect_eof(in, path);
  return {std::move(input), std::move(target)};
}

}  // namespace bandbridge::raster
