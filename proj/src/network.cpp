#include "msreg/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <zlib.h>

#include "msreg/errors.hpp"
#include "msreg/rng.hpp"

namespace msreg {

NetworkSpec NetworkSpec::standard() {
  NetworkSpec s;
  s.input_size = 448;
  s.block_channels = {16, 32, 64, 128, 256, 512};
  s.block_convs = {1, 1, 1, 2, 2, 2};
  return s;
}

std::vector<std::pair<int, int>> NetworkSpec::conv_shapes() const {
  std::vector<std::pair<int, int>> shapes;
  int in_ch = 3;
  for (size_t b = 0; b < block_channels.size(); ++b) {
    for (int c = 0; c < block_convs[b]; ++c) {
      shapes.emplace_back(block_channels[b], in_ch);
      in_ch = block_channels[b];
    }
  }
  return shapes;
}

int NetworkSpec::conv_count() const {
  int n = 0;
  for (int c : block_convs) n += c;
  return n;
}

FeatureTensor conv2d_relu(const FeatureTensor& input, const ConvWeights& w) {
  if (w.in_ch != input.channels)
    throw shape_error("conv2d_relu: kernel expects " +
                      std::to_string(w.in_ch) + " input channels, got " +
                      std::to_string(input.channels));
  if (w.kernel.size() != size_t(w.out_ch) * w.in_ch * 9 ||
      w.bias.size() != size_t(w.out_ch))
    throw shape_error("conv2d_relu: weight buffer sizes inconsistent");

  const int h = input.height;
  const int wd = input.width;
  FeatureTensor out(w.out_ch, h, wd);

  // Accumulate one output plane at a time with shifted-row axpy passes.
  // Each output pixel receives its (in_ch, ky, kx) terms in exactly that
  // order via std::fmaf, which keeps the result bit-identical to the
  // naive loop nest while letting the compiler vectorize over x.
  for (int oc = 0; oc < w.out_ch; ++oc) {
    float* acc = out.plane(oc);
    for (int ic = 0; ic < w.in_ch; ++ic) {
      const float* plane = input.plane(ic);
      for (int ky = 0; ky < 3; ++ky) {
        const int y_lo = std::max(0, 1 - ky);
        const int y_hi = std::min(h, h + 1 - ky);
        for (int kx = 0; kx < 3; ++kx) {
          const float kw = w.k(oc, ic, ky, kx);
          const int x_lo = std::max(0, 1 - kx);
          const int x_hi = std::min(wd, wd + 1 - kx);
          for (int y = y_lo; y < y_hi; ++y) {
            const float* src = plane + size_t(y + ky - 1) * wd + (kx - 1);
            float* dst = acc + size_t(y) * wd;
            for (int x = x_lo; x < x_hi; ++x)
              dst[x] = std::fmaf(kw, src[x], dst[x]);
          }
        }
      }
    }
    const float b = w.bias[oc];
    for (size_t i = 0; i < size_t(h) * wd; ++i)
      acc[i] = std::max(acc[i] + b, 0.0f);
  }
  return out;
}

FeatureTensor maxpool2(const FeatureTensor& input) {
  if (input.height % 2 != 0 || input.width % 2 != 0)
    throw shape_error("maxpool2: dims must be even, got " +
                      std::to_string(input.height) + "x" +
                      std::to_string(input.width));
  FeatureTensor out(input.channels, input.height / 2, input.width / 2);
  for (int c = 0; c < input.channels; ++c) {
    const float* src = input.plane(c);
    float* dst = out.plane(c);
    for (int y = 0; y < out.height; ++y) {
      const float* r0 = src + size_t(2 * y) * input.width;
      const float* r1 = r0 + input.width;
      for (int x = 0; x < out.width; ++x) {
        const float m0 = std::max(r0[2 * x], r0[2 * x + 1]);
        const float m1 = std::max(r1[2 * x], r1[2 * x + 1]);
        dst[size_t(y) * out.width + x] = std::max(m0, m1);
      }
    }
  }
  return out;
}

std::map<int, FeatureTensor> forward_taps(const ImageBuffer& img,
                                          const NetworkSpec& spec,
                                          const WeightBundle& weights) {
  if (img.channels != 3)
    throw shape_error("forward_taps: expected a 3-channel image, got " +
                      std::to_string(img.channels) + " channels");
  if (img.width % 64 != 0 || img.height % 64 != 0 || img.width <= 0 ||
      img.height <= 0)
    throw shape_error("forward_taps: image dims must be positive multiples "
                      "of 64, got " +
                      std::to_string(img.width) + "x" +
                      std::to_string(img.height));
  const auto shapes = spec.conv_shapes();
  if (weights.layers.size() != shapes.size())
    throw config_error("forward_taps: bundle has " +
                       std::to_string(weights.layers.size()) +
                       " layers, spec wants " + std::to_string(shapes.size()));
  for (size_t i = 0; i < shapes.size(); ++i)
    if (weights.layers[i].out_ch != shapes[i].first ||
        weights.layers[i].in_ch != shapes[i].second)
      throw config_error("forward_taps: layer " + std::to_string(i) +
                         " shape mismatch against spec");

  // HWC image -> CHW tensor, with optional per-channel normalization.
  FeatureTensor x(3, img.height, img.width);
  for (int c = 0; c < 3; ++c) {
    float* plane = x.plane(c);
    const float mean = weights.has_norm ? weights.norm_mean[c] : 0.0f;
    const float scale = weights.has_norm ? weights.norm_scale[c] : 1.0f;
    for (int y = 0; y < img.height; ++y)
      for (int xx = 0; xx < img.width; ++xx)
        plane[size_t(y) * img.width + xx] =
            (img.at(xx, y, c) - mean) * scale;
  }

  std::map<int, FeatureTensor> taps;
  size_t layer = 0;
  for (size_t b = 0; b < spec.block_channels.size(); ++b) {
    for (int c = 0; c < spec.block_convs[b]; ++c)
      x = conv2d_relu(x, weights.layers[layer++]);
    x = maxpool2(x);
    const int pool_index = int(b) + 1;
    if (pool_index >= 4) taps.emplace(pool_index, x);
  }
  return taps;
}

WeightBundle init_weights_seeded(const NetworkSpec& spec, uint64_t seed) {
  Xoshiro256 rng(seed);
  WeightBundle bundle;
  for (const auto& [out_ch, in_ch] : spec.conv_shapes()) {
    ConvWeights w;
    w.out_ch = out_ch;
    w.in_ch = in_ch;
    w.kernel.resize(size_t(out_ch) * in_ch * 9);
    w.bias.assign(size_t(out_ch), 0.0f);
    // Uniform on [-a, a] with a = sqrt(3)*sqrt(2/fan_in), so the variance
    // equals the He target 2/fan_in, fan_in = in_ch*9.
    const double a = std::sqrt(3.0) * std::sqrt(2.0 / (double(in_ch) * 9.0));
    for (float& v : w.kernel)
      v = float((2.0 * rng.uniform01() - 1.0) * a);
    bundle.layers.push_back(std::move(w));
  }
  return bundle;
}

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(uint8_t(v));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 24));
}

void put_f32(std::vector<uint8_t>& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Cursor {
public:
  Cursor(const std::vector<uint8_t>& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  uint32_t u32() {
    need(4);
    uint32_t v = uint32_t(bytes_[pos_]) | (uint32_t(bytes_[pos_ + 1]) << 8) |
                 (uint32_t(bytes_[pos_ + 2]) << 16) |
                 (uint32_t(bytes_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }

  float f32() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  void raw(void* dst, size_t n) {
    need(n);
    std::memcpy(dst, &bytes_[pos_], n);
    pos_ += n;
  }

  size_t pos() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }

private:
  void need(size_t n) {
    if (bytes_.size() - pos_ < n)
      throw format_error("weights: truncated file " + path_);
  }
  const std::vector<uint8_t>& bytes_;
  const std::string& path_;
  size_t pos_ = 0;
};

} // namespace

void save_weights(const WeightBundle& bundle, const std::string& path) {
  std::vector<uint8_t> out;
  out.insert(out.end(), {'M', 'S', 'R', 'W'});
  put_u32(out, 1);
  put_u32(out, uint32_t(bundle.layers.size()));
  for (const ConvWeights& w : bundle.layers) {
    put_u32(out, uint32_t(w.out_ch));
    put_u32(out, uint32_t(w.in_ch));
    put_u32(out, 3);
    put_u32(out, 3);
    for (float v : w.kernel) put_f32(out, v);
    for (float v : w.bias) put_f32(out, v);
  }
  if (bundle.has_norm) {
    out.insert(out.end(), {'N', 'O', 'R', 'M'});
    for (int i = 0; i < 3; ++i) put_f32(out, bundle.norm_mean[i]);
    for (int i = 0; i < 3; ++i) put_f32(out, bundle.norm_scale[i]);
  }
  uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data(), uInt(out.size()));
  put_u32(out, crc);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()),
          std::streamsize(out.size()));
  if (!f) throw io_error("short write to " + path);
}

WeightBundle load_weights(const std::string& path, const NetworkSpec& spec) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());

  if (bytes.size() < 4 + 4 + 4 + 4)
    throw format_error("weights: truncated file " + path);
  // The CRC32 footer covers every byte before it.
  const size_t body = bytes.size() - 4;
  uint32_t stored = uint32_t(bytes[body]) | (uint32_t(bytes[body + 1]) << 8) |
                    (uint32_t(bytes[body + 2]) << 16) |
                    (uint32_t(bytes[body + 3]) << 24);
  uint32_t actual = crc32(0L, Z_NULL, 0);
  actual = crc32(actual, bytes.data(), uInt(body));
  if (stored != actual)
    throw format_error("weights: checksum mismatch in " + path);

  Cursor in(bytes, path);
  char magic[4];
  in.raw(magic, 4);
  if (std::memcmp(magic, "MSRW", 4) != 0)
    throw format_error("weights: bad magic in " + path);
  const uint32_t version = in.u32();
  if (version != 1)
    throw format_error("weights: unsupported version " +
                       std::to_string(version) + " in " + path);

  const auto shapes = spec.conv_shapes();
  const uint32_t layer_count = in.u32();
  if (layer_count != shapes.size())
    throw config_error("weights: file has " + std::to_string(layer_count) +
                       " layers, spec wants " + std::to_string(shapes.size()));

  WeightBundle bundle;
  for (uint32_t i = 0; i < layer_count; ++i) {
    ConvWeights w;
    w.out_ch = int(in.u32());
    w.in_ch = int(in.u32());
    const uint32_t kh = in.u32();
    const uint32_t kw = in.u32();
    if (kh != 3 || kw != 3)
      throw config_error("weights: layer " + std::to_string(i) +
                         " kernel is not 3x3 in " + path);
    if (w.out_ch != shapes[i].first || w.in_ch != shapes[i].second)
      throw config_error("weights: layer " + std::to_string(i) +
                         " shape mismatch against spec (file " +
                         std::to_string(w.out_ch) + "x" +
                         std::to_string(w.in_ch) + ", spec " +
                         std::to_string(shapes[i].first) + "x" +
                         std::to_string(shapes[i].second) + ")");
    w.kernel.resize(size_t(w.out_ch) * w.in_ch * 9);
    w.bias.resize(size_t(w.out_ch));
    in.raw(w.kernel.data(), w.kernel.size() * 4);
    in.raw(w.bias.data(), w.bias.size() * 4);
    bundle.layers.push_back(std::move(w));
  }

  if (in.pos() < body) {
    char tag[4];
    in.raw(tag, 4);
    if (std::memcmp(tag, "NORM", 4) != 0)
      throw format_error("weights: unknown trailing section in " + path);
    for (int i = 0; i < 3; ++i) bundle.norm_mean[i] = in.f32();
    for (int i = 0; i < 3; ++i) bundle.norm_scale[i] = in.f32();
    bundle.has_norm = true;
  }
  if (in.pos() != body)
    throw format_error("weights: unexpected trailing bytes in " + path);
  return bundle;
}

} // namespace msreg
