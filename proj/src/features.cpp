#include "msreg/features.hpp"

#include <algorithm>
#include <cmath>

#include "msreg/errors.hpp"

namespace msreg {
namespace {

DescriptorLevel reindex(const FeatureTensor& tap) {
  DescriptorLevel level;
  level.grid_h = tap.height;
  level.grid_w = tap.width;
  level.dim = tap.channels;
  level.data.resize(size_t(level.rows()) * level.dim);
  for (int i = 0; i < tap.height; ++i)
    for (int j = 0; j < tap.width; ++j) {
      float* row = &level.data[size_t(i * tap.width + j) * level.dim];
      for (int c = 0; c < tap.channels; ++c) row[c] = tap.at(c, i, j);
    }
  return level;
}

} // namespace

DescriptorPyramid build_pyramid(const std::map<int, FeatureTensor>& taps) {
  const auto t4 = taps.find(4);
  const auto t5 = taps.find(5);
  const auto t6 = taps.find(6);
  if (t4 == taps.end() || t5 == taps.end() || t6 == taps.end())
    throw shape_error("build_pyramid: taps 4, 5 and 6 are required");
  const FeatureTensor& p4 = t4->second;
  const FeatureTensor& p5 = t5->second;
  const FeatureTensor& p6 = t6->second;
  if (p5.height * 2 != p4.height || p5.width * 2 != p4.width ||
      p6.height * 4 != p4.height || p6.width * 4 != p4.width)
    throw shape_error("build_pyramid: tap grids do not halve consistently");
  if (p5.channels != 2 * p4.channels || p6.channels != 4 * p4.channels)
    throw shape_error("build_pyramid: tap channel counts do not double");

  DescriptorPyramid pyr;
  pyr.f1 = reindex(p4);
  pyr.f2 = reindex(p5);
  pyr.f3 = reindex(p6);
  pyr.frame_size = p4.width * 16;
  pyr.cell_px = 16;
  pyr.source_w = pyr.frame_size;
  pyr.source_h = pyr.frame_size;
  return pyr;
}

CornerGate harris_corners(const ImageBuffer& img, double k,
                          double threshold_rel, int nms_radius) {
  if (img.width != 448 || img.height != 448)
    throw shape_error("harris_corners: expected a 448x448 frame, got " +
                      std::to_string(img.width) + "x" +
                      std::to_string(img.height));
  if (threshold_rel <= 0.0 || threshold_rel >= 1.0)
    throw argument_error("harris_corners: threshold_rel must be in (0,1)");
  if (nms_radius < 1)
    throw argument_error("harris_corners: nms_radius must be >= 1");

  const ImageBuffer gray = to_grayscale(img);
  const int w = gray.width;
  const int h = gray.height;

  // Sobel gradients; the one-pixel border is left at zero.
  std::vector<float> ix(size_t(w) * h, 0.0f), iy(size_t(w) * h, 0.0f);
  for (int y = 1; y < h - 1; ++y) {
    const float* r0 = &gray.data[size_t(y - 1) * w];
    const float* r1 = &gray.data[size_t(y) * w];
    const float* r2 = &gray.data[size_t(y + 1) * w];
    for (int x = 1; x < w - 1; ++x) {
      ix[size_t(y) * w + x] = (r0[x + 1] - r0[x - 1]) +
                              2.0f * (r1[x + 1] - r1[x - 1]) +
                              (r2[x + 1] - r2[x - 1]);
      iy[size_t(y) * w + x] = (r2[x - 1] - r0[x - 1]) +
                              2.0f * (r2[x] - r0[x]) +
                              (r2[x + 1] - r0[x + 1]);
    }
  }

  std::vector<float> xx(size_t(w) * h), yy(size_t(w) * h), xy(size_t(w) * h);
  for (size_t i = 0; i < xx.size(); ++i) {
    xx[i] = ix[i] * ix[i];
    yy[i] = iy[i] * iy[i];
    xy[i] = ix[i] * iy[i];
  }

  // Separable 5x5 Gaussian, sigma 1, replicated borders.
  float g[5];
  {
    double gsum = 0.0;
    for (int i = -2; i <= 2; ++i) gsum += std::exp(-0.5 * i * i);
    for (int i = -2; i <= 2; ++i)
      g[i + 2] = float(std::exp(-0.5 * i * i) / gsum);
  }
  auto smooth = [&](std::vector<float>& buf) {
    std::vector<float> tmp(buf.size());
    for (int y = 0; y < h; ++y) {
      const float* src = &buf[size_t(y) * w];
      float* dst = &tmp[size_t(y) * w];
      for (int x = 0; x < w; ++x) {
        float s = 0.0f;
        for (int d = -2; d <= 2; ++d)
          s += g[d + 2] * src[std::clamp(x + d, 0, w - 1)];
        dst[x] = s;
      }
    }
    for (int x = 0; x < w; ++x)
      for (int y = 0; y < h; ++y) {
        float s = 0.0f;
        for (int d = -2; d <= 2; ++d)
          s += g[d + 2] * tmp[size_t(std::clamp(y + d, 0, h - 1)) * w + x];
        buf[size_t(y) * w + x] = s;
      }
  };
  smooth(xx);
  smooth(yy);
  smooth(xy);

  std::vector<float> resp(size_t(w) * h);
  float max_r = 0.0f;
  for (size_t i = 0; i < resp.size(); ++i) {
    const float det = xx[i] * yy[i] - xy[i] * xy[i];
    const float tr = xx[i] + yy[i];
    resp[i] = det - float(k) * tr * tr;
    max_r = std::max(max_r, resp[i]);
  }

  CornerGate gate;
  gate.grid_w = w / 16;
  gate.grid_h = h / 16;
  gate.cell_px = 16;
  gate.mask.assign(size_t(gate.cells()), 0);
  gate.cell_strongest.assign(size_t(gate.cells()), -1);
  if (max_r <= 0.0f) return gate; // flat image: nothing sticks out

  const float thresh = float(threshold_rel) * max_r;
  const int r = nms_radius;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = resp[size_t(y) * w + x];
      if (v < thresh) continue;
      // Non-maximum suppression; exact ties go to the first pixel in scan
      // order so plateaus yield a single corner.
      bool is_max = true;
      for (int dy = -r; dy <= r && is_max; ++dy) {
        const int qy = y + dy;
        if (qy < 0 || qy >= h) continue;
        for (int dx = -r; dx <= r; ++dx) {
          const int qx = x + dx;
          if (qx < 0 || qx >= w || (dx == 0 && dy == 0)) continue;
          const float q = resp[size_t(qy) * w + qx];
          const bool earlier = qy < y || (qy == y && qx < x);
          if (earlier ? q >= v : q > v) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;
      const int cell = (y / 16) * gate.grid_w + (x / 16);
      gate.mask[cell] = 1;
      if (gate.cell_strongest[cell] < 0 ||
          gate.corners[gate.cell_strongest[cell]].response < v)
        gate.cell_strongest[cell] = int(gate.corners.size());
      gate.corners.push_back({x, y, v});
    }
  }
  return gate;
}

} // namespace msreg
