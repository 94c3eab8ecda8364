#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "msreg/image.hpp"
#include "msreg/tensor.hpp"

namespace msreg {

// One 3x3 conv layer: kernel stored row-major as (out_ch, in_ch, ky, kx),
// bias one value per output channel.
struct ConvWeights {
  int out_ch = 0;
  int in_ch = 0;
  std::vector<float> kernel; // out_ch * in_ch * 9
  std::vector<float> bias;   // out_ch

  float k(int oc, int ic, int ky, int kx) const {
    return kernel[((size_t(oc) * in_ch + ic) * 3 + ky) * 3 + kx];
  }
};

// Backbone description: six blocks of 3x3 convs, each block followed by a
// 2x2 max pool. Blocks 1-3 hold one conv, blocks 4-6 hold two, for nine
// convs total; output channels double per block starting at 16, so the
// taps after pools 4/5/6 carry 128/256/512 channels.
struct NetworkSpec {
  int input_size = 448;                    // nominal square input
  std::vector<int> block_channels;         // output channels per block
  std::vector<int> block_convs;            // convs per block

  static NetworkSpec standard();

  // Flattened per-conv (out_ch, in_ch) pairs in forward order.
  std::vector<std::pair<int, int>> conv_shapes() const;
  int conv_count() const;
};

struct WeightBundle {
  std::vector<ConvWeights> layers;
  // Optional per-channel input normalization (applied as (v-mean)*scale
  // when present); seeded bundles never carry it.
  bool has_norm = false;
  float norm_mean[3] = {0.0f, 0.0f, 0.0f};
  float norm_scale[3] = {1.0f, 1.0f, 1.0f};
};

// Zero-padded (pad 1, stride 1) 3x3 cross-correlation plus bias, then ReLU.
// Per-pixel accumulation order is fixed (in_ch, ky, kx) with fused
// multiply-adds, so results are bit-identical to the reference loop nest
// regardless of vectorization.
FeatureTensor conv2d_relu(const FeatureTensor& input, const ConvWeights& w);

// Non-overlapping 2x2 max; dims must be even.
FeatureTensor maxpool2(const FeatureTensor& input);

// Full forward pass; returns the activations after pools 4, 5 and 6 keyed
// by pool index. Input must be 3-channel with both dims multiples of 64.
std::map<int, FeatureTensor> forward_taps(const ImageBuffer& img,
                                          const NetworkSpec& spec,
                                          const WeightBundle& weights);

// Deterministic He-scaled uniform init: weights are (2u-1)*sqrt(3)*
// sqrt(2/(in_ch*9)) drawn from xoshiro256** seeded with `seed`, in layer
// order and kernel row-major (out,in,ky,kx) order; biases zero.
WeightBundle init_weights_seeded(const NetworkSpec& spec, uint64_t seed);

// MSRW container (little-endian): magic "MSRW", version u32 = 1,
// layer_count u32, per layer {out,in,kh=3,kw=3 as u32, kernel f32s,
// bias f32s}, optional "NORM" tag + 6 f32, then a CRC32 of everything
// before the footer.
WeightBundle load_weights(const std::string& path, const NetworkSpec& spec);
void save_weights(const WeightBundle& bundle, const std::string& path);

} // namespace msreg
