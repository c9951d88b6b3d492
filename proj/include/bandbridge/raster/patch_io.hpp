#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

#include "bandbridge/raster/raster.hpp"

namespace bandbridge::raster {

// BBP1 layout, all little-endian:
//   0  magic "BBP1"          4 B
//   4  version (1)           u16
//   6  band count            u8
//   7  band codes            7 B, zero padded
//  14  height                u32
//  18  width                 u32
//  22  gsd_m                 f32
//  26  origin x              f32
//  30  origin y              f32
//  34  reserved, zero        30 B
//  64  payload               C planes of H*W f32, row-major
inline constexpr std::size_t kPatchHeaderBytes = 64;
inline constexpr std::uint16_t kPatchVersion = 1;

std::size_t encoded_size(const RasterPatch& patch);

void write_patch(const RasterPatch& patch, std::ostream& out);
RasterPatch read_patch(std::istream& in);

// Single-record files; read_patch rejects trailing bytes.
void write_patch(const RasterPatch& patch, const std::filesystem::path& path);
RasterPatch read_patch(const std::filesystem::path& path);

// A pair file is two consecutive records: the input stack, then the target.
void write_pair(const RasterPatch& input, const RasterPatch& target, const std::filesystem::path& path);
std::pair<RasterPatch, RasterPatch> read_pair(const std::filesystem::path& path);

}  // namespace bandbridge::raster
