#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "naraim/image.hpp"

namespace naraim {

using Bytes = std::vector<std::uint8_t>;

// Binary and ASCII netpbm (P2, P3, P5, P6), 8-bit. Gray maps replicate into
// all three channels.
Image decode_pnm(std::span<const std::uint8_t> bytes);
// 8-bit PNG, any color type libpng can expand to RGB.
Image decode_png(std::span<const std::uint8_t> bytes);
// Dispatches on the magic bytes.
Image decode_image(std::span<const std::uint8_t> bytes);
Image read_image(const std::filesystem::path& path);

// Binary P6 with 8-bit quantization.
Bytes encode_ppm(const Image& img);
void write_ppm(const std::filesystem::path& path, const Image& img);

Bytes read_file(const std::filesystem::path& path);
// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace naraim
