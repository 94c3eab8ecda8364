#pragma once

#include <cstddef>
#include <vector>

namespace msreg {

// Dense CHW float tensor used for network activations.
struct FeatureTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data; // channels * height * width

  FeatureTensor() = default;
  FeatureTensor(int c, int h, int w)
      : channels(c), height(h), width(w),
        data(size_t(c) * size_t(h) * size_t(w), 0.0f) {}

  float& at(int c, int y, int x) {
    return data[(size_t(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[(size_t(c) * height + y) * width + x];
  }

  float* plane(int c) { return &data[size_t(c) * height * width]; }
  const float* plane(int c) const { return &data[size_t(c) * height * width]; }

  bool empty() const { return data.empty(); }
};

} // namespace msreg
