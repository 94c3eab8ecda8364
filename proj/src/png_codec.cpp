#include "png_codec.hpp"

#include <cstring>
#include <zlib.h>

#include "msreg/errors.hpp"

namespace msreg {
namespace {

constexpr uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

uint32_t read_u32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) |
         (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void write_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v >> 24));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

void append_chunk(std::vector<uint8_t>& out, const char type[4],
                  const uint8_t* payload, size_t n) {
  write_u32(out, uint32_t(n));
  const size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload, payload + n);
  uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + type_at, uInt(4 + n));
  write_u32(out, crc);
}

std::vector<uint8_t> zlib_inflate(const uint8_t* data, size_t n,
                                  size_t expected, const std::string& origin) {
  std::vector<uint8_t> out(expected);
  z_stream zs;
  std::memset(&zs, 0, sizeof(zs));
  if (inflateInit(&zs) != Z_OK)
    throw io_error("png: inflateInit failed for " + origin);
  zs.next_in = const_cast<Bytef*>(data);
  zs.avail_in = uInt(n);
  zs.next_out = out.data();
  zs.avail_out = uInt(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.avail_out != 0)
    throw format_error("png: corrupt or truncated image data in " + origin);
  return out;
}

std::vector<uint8_t> zlib_deflate(const uint8_t* data, size_t n) {
  uLongf bound = compressBound(uLong(n));
  std::vector<uint8_t> out(bound);
  if (compress2(out.data(), &bound, data, uLong(n), Z_BEST_SPEED) != Z_OK)
    throw io_error("png: deflate failed");
  out.resize(bound);
  return out;
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

} // namespace

PngImage png_decode(const std::vector<uint8_t>& file, const std::string& origin) {
  if (file.size() < 8 || std::memcmp(file.data(), kSignature, 8) != 0)
    throw format_error("png: bad signature in " + origin);

  PngImage img;
  int bit_depth = 0, color_type = -1;
  bool have_header = false, have_end = false;
  std::vector<uint8_t> idat;

  size_t pos = 8;
  while (pos + 8 <= file.size()) {
    const uint32_t len = read_u32(&file[pos]);
    if (pos + 12 + size_t(len) > file.size())
      throw format_error("png: truncated chunk in " + origin);
    const char* type = reinterpret_cast<const char*>(&file[pos + 4]);
    const uint8_t* payload = &file[pos + 8];

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw format_error("png: bad header length in " + origin);
      img.width = read_u32(payload);
      img.height = read_u32(payload + 4);
      bit_depth = payload[8];
      color_type = payload[9];
      if (payload[10] != 0 || payload[11] != 0)
        throw format_error("png: unsupported compression/filter method in " +
                           origin);
      if (payload[12] != 0)
        throw format_error("png: interlaced images unsupported in " + origin);
      if (bit_depth != 8)
        throw format_error("png: only 8-bit depth supported in " + origin);
      if (color_type == 0)
        img.channels = 1;
      else if (color_type == 2)
        img.channels = 3;
      else
        throw format_error("png: only grayscale and RGB supported in " +
                           origin);
      if (img.width == 0 || img.height == 0)
        throw format_error("png: zero-sized image in " + origin);
      have_header = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      if (!have_header) throw format_error("png: data before header in " + origin);
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      have_end = true;
      break;
    }
    // Ancillary chunks are skipped.
    pos += 12 + size_t(len);
  }
  if (!have_header || !have_end || idat.empty())
    throw format_error("png: missing required chunks in " + origin);

  const size_t stride = size_t(img.width) * img.channels;
  const size_t raw_size = (stride + 1) * img.height;
  std::vector<uint8_t> raw = zlib_inflate(idat.data(), idat.size(), raw_size,
                                          origin);

  img.pixels.resize(stride * img.height);
  const int bpp = img.channels; // bytes per pixel at 8-bit depth
  for (uint32_t y = 0; y < img.height; ++y) {
    const uint8_t filter = raw[(stride + 1) * y];
    const uint8_t* src = &raw[(stride + 1) * y + 1];
    uint8_t* cur = &img.pixels[stride * y];
    const uint8_t* up = y > 0 ? &img.pixels[stride * (y - 1)] : nullptr;
    switch (filter) {
      case 0:
        std::memcpy(cur, src, stride);
        break;
      case 1: // Sub
        for (size_t i = 0; i < stride; ++i) {
          const int left = i >= size_t(bpp) ? cur[i - bpp] : 0;
          cur[i] = uint8_t(src[i] + left);
        }
        break;
      case 2: // Up
        for (size_t i = 0; i < stride; ++i)
          cur[i] = uint8_t(src[i] + (up ? up[i] : 0));
        break;
      case 3: // Average
        for (size_t i = 0; i < stride; ++i) {
          const int left = i >= size_t(bpp) ? cur[i - bpp] : 0;
          const int above = up ? up[i] : 0;
          cur[i] = uint8_t(src[i] + (left + above) / 2);
        }
        break;
      case 4: // Paeth
        for (size_t i = 0; i < stride; ++i) {
          const int left = i >= size_t(bpp) ? cur[i - bpp] : 0;
          const int above = up ? up[i] : 0;
          const int corner = (up && i >= size_t(bpp)) ? up[i - bpp] : 0;
          cur[i] = uint8_t(src[i] + paeth(left, above, corner));
        }
        break;
      default:
        throw format_error("png: unknown scanline filter in " + origin);
    }
  }
  return img;
}

std::vector<uint8_t> png_encode(const PngImage& img) {
  if (img.channels != 1 && img.channels != 3)
    throw argument_error("png: encoder supports 1 or 3 channels");
  const size_t stride = size_t(img.width) * img.channels;
  if (img.pixels.size() != stride * img.height)
    throw argument_error("png: pixel buffer size mismatch");

  // Filter every scanline with Sub: cheap and compresses smooth data well.
  std::vector<uint8_t> raw((stride + 1) * img.height);
  const int bpp = img.channels;
  for (uint32_t y = 0; y < img.height; ++y) {
    raw[(stride + 1) * y] = 1;
    const uint8_t* cur = &img.pixels[stride * y];
    uint8_t* dst = &raw[(stride + 1) * y + 1];
    for (size_t i = 0; i < stride; ++i) {
      const int left = i >= size_t(bpp) ? cur[i - bpp] : 0;
      dst[i] = uint8_t(cur[i] - left);
    }
  }
  const std::vector<uint8_t> compressed = zlib_deflate(raw.data(), raw.size());

  std::vector<uint8_t> out(kSignature, kSignature + 8);
  uint8_t ihdr[13];
  ihdr[0] = uint8_t(img.width >> 24);
  ihdr[1] = uint8_t(img.width >> 16);
  ihdr[2] = uint8_t(img.width >> 8);
  ihdr[3] = uint8_t(img.width);
  ihdr[4] = uint8_t(img.height >> 24);
  ihdr[5] = uint8_t(img.height >> 16);
  ihdr[6] = uint8_t(img.height >> 8);
  ihdr[7] = uint8_t(img.height);
  ihdr[8] = 8;                                  // bit depth
  ihdr[9] = img.channels == 1 ? 0 : 2;          // color type
  ihdr[10] = 0;
  ihdr[11] = 0;
  ihdr[12] = 0;
  append_chunk(out, "IHDR", ihdr, sizeof(ihdr));
  append_chunk(out, "IDAT", compressed.data(), compressed.size());
  append_chunk(out, "IEND", nullptr, 0);
  return out;
}

} // namespace msreg
