#pragma once

#include <filesystem>
#include <vector>

namespace knowsite {

// 8-bit RGB PNG writer (zlib-compressed), row-major pixels.
void write_png(const std::filesystem::path& path, int width, int height,
               const std::vector<unsigned char>& rgb);

// Renders a value matrix as a colored grid, scaled to the value range.
void write_heatmap_png(const std::filesystem::path& path,
                       const std::vector<std::vector<double>>& values,
                       int cell_size = 24);

}  // namespace knowsite
