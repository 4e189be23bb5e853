#include "knowsite/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "knowsite/errors.hpp"

namespace knowsite {

namespace {

void put_u32(std::ofstream& out, uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
      static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_chunk(std::ofstream& out, const char type[4],
               const std::vector<unsigned char>& payload) {
  put_u32(out, static_cast<uint32_t>(payload.size()));
  out.write(type, 4);
  if (!payload.empty()) {
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
  }
  uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
  if (!payload.empty()) {
    crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
  }
  put_u32(out, static_cast<uint32_t>(crc));
}

}  // namespace

void write_png(const std::filesystem::path& path, int width, int height,
               const std::vector<unsigned char>& rgb) {
  if (width < 1 || height < 1 ||
      rgb.size() != static_cast<size_t>(width) * height * 3) {
    throw ContractError("png writer needs width*height*3 rgb bytes");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SourceError("cannot write " + path.string());
  const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.write(reinterpret_cast<const char*>(sig), 8);

  std::vector<unsigned char> ihdr(13);
  auto u32at = [&](size_t i, uint32_t v) {
    ihdr[i] = static_cast<unsigned char>(v >> 24);
    ihdr[i + 1] = static_cast<unsigned char>(v >> 16);
    ihdr[i + 2] = static_cast<unsigned char>(v >> 8);
    ihdr[i + 3] = static_cast<unsigned char>(v);
  };
  u32at(0, static_cast<uint32_t>(width));
  u32at(4, static_cast<uint32_t>(height));
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 2;   // truecolor
  ihdr[10] = 0;  // deflate
  ihdr[11] = 0;  // filter
  ihdr[12] = 0;  // no interlace
  put_chunk(out, "IHDR", ihdr);

  // Raw scanlines with filter byte 0.
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<size_t>(height) * (1 + 3 * width));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    const unsigned char* row = rgb.data() + static_cast<size_t>(y) * width * 3;
    raw.insert(raw.end(), row, row + static_cast<size_t>(width) * 3);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw ContractError("zlib compression failed");
  }
  compressed.resize(bound);
  put_chunk(out, "IDAT", compressed);
  put_chunk(out, "IEND", {});
}

void write_heatmap_png(const std::filesystem::path& path,
                       const std::vector<std::vector<double>>& values,
                       int cell_size) {
  if (values.empty() || values[0].empty()) {
    throw ContractError("heatmap needs a nonempty matrix");
  }
  double lo = values[0][0], hi = values[0][0];
  for (const auto& row : values) {
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double span = hi - lo < 1e-15 ? 1.0 : hi - lo;
  const int rows = static_cast<int>(values.size());
  const int cols = static_cast<int>(values[0].size());
  const int w = cols * cell_size, h = rows * cell_size;
  std::vector<unsigned char> rgb(static_cast<size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v =
          (values[static_cast<size_t>(y / cell_size)]
                 [static_cast<size_t>(x / cell_size)] -
           lo) /
          span;
      // Dark blue to warm yellow ramp.
      const double r = std::clamp(1.5 * v - 0.25, 0.0, 1.0);
      const double g = std::clamp(1.2 * v, 0.0, 1.0);
      const double b = std::clamp(0.9 - 0.8 * v, 0.0, 1.0);
      const size_t i = (static_cast<size_t>(y) * w + x) * 3;
      rgb[i] = static_cast<unsigned char>(255 * r);
      rgb[i + 1] = static_cast<unsigned char>(255 * g);
      rgb[i + 2] = static_cast<unsigned char>(255 * b);
    }
  }
  write_png(path, w, h, rgb);
}

}  // namespace knowsite
