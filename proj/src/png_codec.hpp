#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace msreg {

// Minimal PNG support: 8-bit depth, color type 0 (grayscale) or 2 (RGB),
// no interlacing. The chunk and scanline-filter layers live here; the
// DEFLATE stream itself is handled by zlib.
struct PngImage {
  uint32_t width = 0;
  uint32_t height = 0;
  int channels = 0;                 // 1 or 3
  std::vector<uint8_t> pixels;      // height * width * channels
};

PngImage png_decode(const std::vector<uint8_t>& file_bytes,
                    const std::string& origin);
std::vector<uint8_t> png_encode(const PngImage& img);

} // namespace msreg
