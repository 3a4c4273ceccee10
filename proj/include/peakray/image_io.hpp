#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "peakray/raycaster.hpp"

namespace peakray {

/// Binary P6, alpha dropped.
std::vector<std::uint8_t> encode_ppm(const FrameBuffer& frame);
/// 8-bit RGBA PNG at a fixed compression level (deterministic for a given libpng).
std::vector<std::uint8_t> encode_png(const FrameBuffer& frame);

/// Picks PPM or PNG from the extension (.ppm / .png). Throws std::invalid_argument
/// for other extensions and std::runtime_error on I/O failure.
void write_image(const FrameBuffer& frame, const std::filesystem::path& path);

/// Reads a binary P6 file back (alpha set to 255). Used by golden tests.
FrameBuffer read_ppm(const std::filesystem::path& path);

}  // namespace peakray
