#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "msreg/image.hpp"
#include "msreg/tensor.hpp"
#include "msreg/vec2.hpp"

namespace msreg {

// One descriptor level: `rows` cells, each with a `dim`-wide channel
// vector taken straight from a pooled activation map (no normalization —
// the fused-distance weights already balance the levels).
struct DescriptorLevel {
  int grid_h = 0;
  int grid_w = 0;
  int dim = 0;
  std::vector<float> data; // grid_h * grid_w * dim, row-major cells

  int rows() const { return grid_h * grid_w; }
  const float* row(int r) const { return &data[size_t(r) * dim]; }
};

// Three-level pyramid over the resized frame. Level-1 cell (i,j) has
// parent (i/2, j/2) at level 2 and (i/4, j/4) at level 3; with the
// standard 448 input the row counts are 784, 196 and 49.
struct DescriptorPyramid {
  DescriptorLevel f1;
  DescriptorLevel f2;
  DescriptorLevel f3;
  int frame_size = 448;   // the resized frame the grid lives in
  int cell_px = 16;       // input pixels per level-1 cell
  int source_w = 448;     // pre-resize image dims (set by the caller)
  int source_h = 448;

  // Center of level-1 cell r in resized-frame pixel coordinates.
  Vec2 cell_center(int r) const {
    const int i = r / f1.grid_w;
    const int j = r % f1.grid_w;
    return {cell_px * (j + 0.5) - 0.5, cell_px * (i + 0.5) - 0.5};
  }
};

struct Corner {
  int x = 0;
  int y = 0;
  float response = 0.0f;
};

// Harris gate over the level-1 grid: mask[k] is true iff at least one
// corner fell inside cell k's 16x16 block; cell_strongest[k] indexes the
// highest-response corner in that cell (-1 where the mask is false).
struct CornerGate {
  int grid_h = 28;
  int grid_w = 28;
  int cell_px = 16;
  std::vector<uint8_t> mask;
  std::vector<Corner> corners;
  std::vector<int> cell_strongest;

  int cells() const { return grid_h * grid_w; }
  bool gated(int r) const { return mask[r] != 0; }
};

// Reindex pooled activations (pools 4, 5, 6) into descriptor matrices.
DescriptorPyramid build_pyramid(const std::map<int, FeatureTensor>& taps);

// Harris detector on the 448x448 resized frame: Sobel gradients, 5x5
// Gaussian-smoothed structure tensor (sigma 1), R = det - k*trace^2,
// relative threshold, then non-maximum suppression of the given radius.
CornerGate harris_corners(const ImageBuffer& img, double k,
                          double threshold_rel, int nms_radius);

} // namespace msreg
