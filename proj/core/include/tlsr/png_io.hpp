#pragma once

#include <filesystem>

#include "tlsr/image.hpp"

namespace tlsr::imaging {

/// Reads an 8- or 16-bit PNG. Palette images are expanded, alpha is dropped,
/// gray stays single channel. Throws DataError on unreadable input.
Image read_png(const std::filesystem::path& path);

/// Writes 8-bit RGB or gray; values are clamped to [0,1] and rounded.
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace tlsr::imaging
