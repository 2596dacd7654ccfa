#pragma once

#include <filesystem>

#include "tamperkit/raster.hpp"

namespace tamperkit {

// 8-bit PNG, grayscale or RGB. Alpha is dropped, 16-bit input is reduced to 8.
Raster read_png(const std::filesystem::path& path);
// Writes round(v * 255) clamped to [0,255]. Output bytes depend only on the raster.
void write_png(const std::filesystem::path& path, const Raster& img);

}  // namespace tamperkit
