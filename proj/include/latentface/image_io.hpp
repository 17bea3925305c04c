#pragma once

#include <filesystem>

#include "latentface/image.hpp"

namespace latentface {

// 8-bit RGB PNG; values are clamped to [0,1] and rounded to the nearest level.
void write_png(const std::filesystem::path& path, const Image& image);

// Returns an RGB image in [0,1]. Gray and alpha channels are expanded/dropped.
Image read_png(const std::filesystem::path& path);

} // namespace latentface
