#pragma once

#include <filesystem>

#include "thermalsplat/scene.hpp"

namespace thermalsplat {

/// Reads an 8- or 16-bit grayscale or RGB PNG (alpha ignored) into [0, 1];
/// RGB is reduced by channel mean. Throws DataError on anything else.
RadianceImage load_image(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG, clamping to [0, 1] and rounding half up.
void save_image(const RadianceImage& image, const std::filesystem::path& path);

/// Writes a 16-bit grayscale PNG (same rounding rule at 65535 levels).
void save_image16(const RadianceImage& image, const std::filesystem::path& path);

}  // namespace thermalsplat
