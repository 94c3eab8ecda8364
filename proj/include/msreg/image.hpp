#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace msreg {

// Planar-free float image, HWC layout, values nominally in [0,1].
// channels is 1 (grayscale) or 3 (RGB).
struct ImageBuffer {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data; // height * width * channels

  ImageBuffer() = default;
  ImageBuffer(int w, int h, int c)
      : width(w), height(h), channels(c),
        data(size_t(w) * size_t(h) * size_t(c), 0.0f) {}

  static ImageBuffer zeros(int w, int h, int c) { return ImageBuffer(w, h, c); }

  float& at(int x, int y, int c) {
    return data[(size_t(y) * width + x) * channels + c];
  }
  float at(int x, int y, int c) const {
    return data[(size_t(y) * width + x) * channels + c];
  }

  bool empty() const { return data.empty(); }
};

// Codec layer. Format is picked from the file extension:
//   .pgm -> binary P5 (grayscale), .ppm -> binary P6 (RGB),
//   .png -> 8-bit grayscale or RGB PNG.
// Loading maps 8-bit samples to [0,1] via /255; saving rounds
// clamp(v,0,1)*255 to nearest.
ImageBuffer load_image(const std::string& path);
void save_image(const ImageBuffer& img, const std::string& path);

// Bilinear resampling with half-pixel centers:
//   src = (dst + 0.5) * (in_size / out_size) - 0.5, clamped to borders.
ImageBuffer resize_bilinear(const ImageBuffer& img, int out_w, int out_h);

// ITU-R BT.601 luma: 0.299 R + 0.587 G + 0.114 B. Grayscale input passes
// through unchanged.
ImageBuffer to_grayscale(const ImageBuffer& img);

// Axis-aligned crop; the rectangle must lie inside the image.
ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int w, int h);

// Replicate a single channel into R=G=B. RGB input passes through.
ImageBuffer expand_to_rgb(const ImageBuffer& img);

// Photometric mismatch model. `gain` scales each channel (clamped back
// into [0,1]); `separate` copies one source channel into all three,
// mimicking a spectrum-separated sensor.
struct ChannelTransform {
  enum class Mode { identity, gain, separate };
  Mode mode = Mode::identity;
  double gains[3] = {1.0, 1.0, 1.0};
  int channel = 0; // source channel for Mode::separate

  static ChannelTransform identity_transform() { return {}; }
  static ChannelTransform gain3(double r, double g, double b) {
    ChannelTransform t;
    t.mode = Mode::gain;
    t.gains[0] = r;
    t.gains[1] = g;
    t.gains[2] = b;
    return t;
  }
  static ChannelTransform separate(int k) {
    ChannelTransform t;
    t.mode = Mode::separate;
    t.channel = k;
    return t;
  }
};

ImageBuffer apply_channel_transform(const ImageBuffer& img,
                                    const ChannelTransform& t);

} // namespace msreg
