#pragma once

#include <filesystem>

#include "mfid/numerics.hpp"

namespace mfid {

// Raw float image: magic "MFID", u32 height, u32 width, u32 channels,
// little-endian float32 payload. Lossless round-trip format used by the
// pipeline; PNG is for viewing only.
void write_image_raw(const Image& img, const std::filesystem::path& path);
Image read_image_raw(const std::filesystem::path& path);

// Minimal 8-bit PNG encoder (gray or RGB), zlib-deflated, no filtering.
void write_image_png(const Image& img, const std::filesystem::path& path);

}  // namespace mfid
