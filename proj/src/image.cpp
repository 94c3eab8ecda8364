#include "msreg/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "msreg/errors.hpp"
#include "png_codec.hpp"

namespace msreg {
namespace {

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::string& path, const void* data, size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out.write(static_cast<const char*>(data), std::streamsize(n));
  if (!out) throw io_error("short write to " + path);
}

std::string lower_ext(const std::string& path) {
  const size_t dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return ext;
}

// PNM header token reader: skips whitespace and '#' comment lines.
size_t next_token(const std::vector<uint8_t>& bytes, size_t pos,
                  std::string& token, const std::string& path) {
  token.clear();
  while (pos < bytes.size()) {
    const char c = char(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < bytes.size() &&
         !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
         bytes[pos] != '#') {
    token.push_back(char(bytes[pos]));
    ++pos;
  }
  if (token.empty()) throw format_error("pnm: truncated header in " + path);
  return pos;
}

int parse_dim(const std::string& token, const std::string& path) {
  size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(token, &used);
  } catch (const std::exception&) {
    throw format_error("pnm: bad header number '" + token + "' in " + path);
  }
  if (used != token.size() || v <= 0)
    throw format_error("pnm: bad header number '" + token + "' in " + path);
  return v;
}

ImageBuffer load_pnm(const std::vector<uint8_t>& bytes,
                     const std::string& path) {
  if (bytes.size() < 2)
    throw format_error("pnm: file too short: " + path);
  const char m0 = char(bytes[0]);
  const char m1 = char(bytes[1]);
  int channels = 0;
  if (m0 == 'P' && m1 == '5')
    channels = 1;
  else if (m0 == 'P' && m1 == '6')
    channels = 3;
  else
    throw format_error("pnm: unsupported magic in " + path);

  std::string tok;
  size_t pos = 2;
  pos = next_token(bytes, pos, tok, path);
  const int w = parse_dim(tok, path);
  pos = next_token(bytes, pos, tok, path);
  const int h = parse_dim(tok, path);
  pos = next_token(bytes, pos, tok, path);
  const int maxval = parse_dim(tok, path);
  if (maxval != 255)
    throw format_error("pnm: only maxval 255 supported, got " + tok + " in " +
                       path);
  if (pos >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw format_error("pnm: malformed header in " + path);
  ++pos; // single whitespace byte separates header from raster

  const size_t need = size_t(w) * size_t(h) * size_t(channels);
  if (bytes.size() - pos < need)
    throw format_error("pnm: truncated pixel data in " + path);

  ImageBuffer img(w, h, channels);
  for (size_t i = 0; i < need; ++i)
    img.data[i] = float(bytes[pos + i]) / 255.0f;
  return img;
}

uint8_t quantize(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return uint8_t(std::lround(c * 255.0f));
}

void save_pnm(const ImageBuffer& img, const std::string& path) {
  std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" +
                       std::to_string(img.width) + " " +
                       std::to_string(img.height) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.data.size());
  for (float v : img.data) out.push_back(quantize(v));
  write_file(path, out.data(), out.size());
}

} // namespace

ImageBuffer load_image(const std::string& path) {
  const std::string ext = lower_ext(path);
  const std::vector<uint8_t> bytes = read_file(path);
  if (ext == "pgm" || ext == "ppm") return load_pnm(bytes, path);
  if (ext == "png") {
    const PngImage png = png_decode(bytes, path);
    ImageBuffer img(int(png.width), int(png.height), png.channels);
    for (size_t i = 0; i < png.pixels.size(); ++i)
      img.data[i] = float(png.pixels[i]) / 255.0f;
    return img;
  }
  throw argument_error("unsupported image extension for " + path +
                       " (expected .pgm, .ppm, or .png)");
}

void save_image(const ImageBuffer& img, const std::string& path) {
  if (img.empty()) throw argument_error("cannot save an empty image");
  if (img.channels != 1 && img.channels != 3)
    throw argument_error("cannot save image with " +
                         std::to_string(img.channels) + " channels");
  const std::string ext = lower_ext(path);
  if (ext == "pgm") {
    if (img.channels != 1)
      throw argument_error(".pgm requires a single-channel image: " + path);
    save_pnm(img, path);
    return;
  }
  if (ext == "ppm") {
    if (img.channels != 3)
      throw argument_error(".ppm requires a three-channel image: " + path);
    save_pnm(img, path);
    return;
  }
  if (ext == "png") {
    PngImage png;
    png.width = uint32_t(img.width);
    png.height = uint32_t(img.height);
    png.channels = img.channels;
    png.pixels.resize(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i)
      png.pixels[i] = quantize(img.data[i]);
    const std::vector<uint8_t> bytes = png_encode(png);
    write_file(path, bytes.data(), bytes.size());
    return;
  }
  throw argument_error("unsupported image extension for " + path +
                       " (expected .pgm, .ppm, or .png)");
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int out_w, int out_h) {
  if (img.empty()) throw argument_error("resize_bilinear: empty input");
  if (out_w <= 0 || out_h <= 0)
    throw argument_error("resize_bilinear: output size must be positive");
  if (out_w == img.width && out_h == img.height) return img;

  ImageBuffer out(out_w, out_h, img.channels);
  const double sx = double(img.width) / out_w;
  const double sy = double(img.height) / out_h;
  const int c = img.channels;

  // Horizontal taps are shared by every row; precompute them.
  std::vector<int> x0(out_w), x1(out_w);
  std::vector<float> fx(out_w);
  for (int x = 0; x < out_w; ++x) {
    const double src = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                  double(img.width - 1));
    x0[x] = int(src);
    x1[x] = std::min(x0[x] + 1, img.width - 1);
    fx[x] = float(src - x0[x]);
  }
  for (int y = 0; y < out_h; ++y) {
    const double src = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                  double(img.height - 1));
    const int y0 = int(src);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const float fy = float(src - y0);
    const float* row0 = &img.data[size_t(y0) * img.width * c];
    const float* row1 = &img.data[size_t(y1) * img.width * c];
    float* dst = &out.data[size_t(y) * out_w * c];
    for (int x = 0; x < out_w; ++x) {
      const float* a = row0 + size_t(x0[x]) * c;
      const float* b = row0 + size_t(x1[x]) * c;
      const float* d = row1 + size_t(x0[x]) * c;
      const float* e = row1 + size_t(x1[x]) * c;
      for (int k = 0; k < c; ++k) {
        const float top = a[k] + (b[k] - a[k]) * fx[x];
        const float bot = d[k] + (e[k] - d[k]) * fx[x];
        dst[size_t(x) * c + k] = top + (bot - top) * fy;
      }
    }
  }
  return out;
}

ImageBuffer to_grayscale(const ImageBuffer& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3)
    throw argument_error("to_grayscale expects 1 or 3 channels");
  ImageBuffer out(img.width, img.height, 1);
  const size_t n = size_t(img.width) * img.height;
  for (size_t i = 0; i < n; ++i) {
    const float* p = &img.data[i * 3];
    out.data[i] = 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
  }
  return out;
}

ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int w, int h) {
  if (w <= 0 || h <= 0) throw argument_error("crop: size must be positive");
  if (x0 < 0 || y0 < 0 || x0 + w > img.width || y0 + h > img.height)
    throw argument_error("crop: rectangle exceeds image bounds");
  ImageBuffer out(w, h, img.channels);
  const size_t row_bytes = size_t(w) * img.channels;
  for (int y = 0; y < h; ++y) {
    const float* src =
        &img.data[(size_t(y0 + y) * img.width + x0) * img.channels];
    std::copy(src, src + row_bytes, &out.data[size_t(y) * row_bytes]);
  }
  return out;
}

ImageBuffer expand_to_rgb(const ImageBuffer& img) {
  if (img.channels == 3) return img;
  if (img.channels != 1)
    throw argument_error("expand_to_rgb expects 1 or 3 channels");
  ImageBuffer out(img.width, img.height, 3);
  const size_t n = size_t(img.width) * img.height;
  for (size_t i = 0; i < n; ++i) {
    const float v = img.data[i];
    out.data[i * 3 + 0] = v;
    out.data[i * 3 + 1] = v;
    out.data[i * 3 + 2] = v;
  }
  return out;
}

ImageBuffer apply_channel_transform(const ImageBuffer& img,
                                    const ChannelTransform& t) {
  if (t.mode == ChannelTransform::Mode::identity) return img;
  if (img.channels != 3)
    throw argument_error("channel transform expects an RGB image");
  ImageBuffer out(img.width, img.height, 3);
  const size_t n = size_t(img.width) * img.height;
  if (t.mode == ChannelTransform::Mode::separate) {
    if (t.channel < 0 || t.channel > 2)
      throw argument_error("channel transform: separate channel must be 0-2");
    for (size_t i = 0; i < n; ++i) {
      const float v = img.data[i * 3 + t.channel];
      out.data[i * 3 + 0] = v;
      out.data[i * 3 + 1] = v;
      out.data[i * 3 + 2] = v;
    }
    return out;
  }
  for (size_t i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k)
      out.data[i * 3 + k] = std::clamp(
          img.data[i * 3 + k] * float(t.gains[k]), 0.0f, 1.0f);
  return out;
}

} // namespace msreg
