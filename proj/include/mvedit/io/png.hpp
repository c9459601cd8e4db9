#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvedit/raster.hpp"

namespace mvedit::io {

using Gray16 = Raster<std::uint16_t>;

/// Reads any 8/16-bit PNG and returns 8-bit RGB (gray is replicated, alpha dropped).
RgbImage read_png_rgb(const std::filesystem::path& path);
void write_png_rgb(const std::filesystem::path& path, const RgbImage& image);

/// Reads a single-channel 16-bit PNG (8-bit inputs are widened).
Gray16 read_png_gray16(const std::filesystem::path& path);
void write_png_gray16(const std::filesystem::path& path, const Gray16& image);

/// Masks are stored as 8-bit gray, 0 / 255; any non-zero value reads as set.
Mask read_png_mask(const std::filesystem::path& path);
void write_png_mask(const std::filesystem::path& path, const Mask& mask);

std::vector<std::uint8_t> encode_png_rgb(const RgbImage& image);
std::vector<std::uint8_t> encode_png_mask(const Mask& mask);

/// ScanNet-style depth: 16-bit millimetres <-> metres (0 stays invalid).
DepthMap read_depth_png(const std::filesystem::path& path);
void write_depth_png(const std::filesystem::path& path, const DepthMap& depth);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

}  // namespace mvedit::io
