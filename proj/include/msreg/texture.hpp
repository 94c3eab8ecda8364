#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "msreg/image.hpp"

namespace msreg {

// Procedural scene generator used by the evaluation and tracking suites.
// The scene is a jittered grid of "wedge fans": nested quarter-disc
// sectors that share an apex and shrink geometrically per level with
// alternating colors. Each apex neighborhood is exactly self-similar
// under power-of-two magnification, so it renders the same local image
// at very different zoom levels — the property blind multiscale
// matching needs — while the smooth arcs avoid spurious corners away
// from the apexes. A smooth background color field tags each region
// with its own color identity.
struct TextureParams {
  int width = 448;
  int height = 448;
  double fan_pitch_frac = 0.085;  // anchor grid pitch / min dim
  double fan_radius_frac = 0.95;  // largest band radius / pitch
  double level_ratio = 0.70710678118654752;  // band shrink per level
  double min_band_px = 1.5;       // stop when bands get thinner than this
  double jitter_frac = 0.25;      // anchor jitter / pitch
  double soft_px = 1.2;           // edge softness, px
  double bg_amp = 0.20;           // smooth background color amplitude
  double noise_amp = 0.004;       // final per-pixel noise
};

ImageBuffer generate_texture(const TextureParams& params, uint64_t seed);

// Same construction, also reporting the apex positions (x, y) of the
// fans that were drawn, in pixel coordinates.
ImageBuffer generate_texture(const TextureParams& params, uint64_t seed,
                             std::vector<std::pair<double, double>>* apexes);

}  // namespace msreg
