#include "msreg/texture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "msreg/errors.hpp"
#include "msreg/rng.hpp"

namespace msreg {
namespace {

// Bilinear lattice noise: one value per lattice node, interpolated.
void add_value_noise(ImageBuffer& img, Xoshiro256& rng, int cells,
                     float amplitude) {
  const int nx = cells + 1;
  std::vector<float> lattice(size_t(nx) * nx * 3);
  for (float& v : lattice) v = float(rng.uniform(-1.0, 1.0));
  for (int y = 0; y < img.height; ++y) {
    const double fy = double(y) / img.height * cells;
    const int y0 = std::min(int(fy), cells - 1);
    const float ty = float(fy - y0);
    for (int x = 0; x < img.width; ++x) {
      const double fx = double(x) / img.width * cells;
      const int x0 = std::min(int(fx), cells - 1);
      const float tx = float(fx - x0);
      for (int c = 0; c < 3; ++c) {
        const float v00 = lattice[(size_t(y0) * nx + x0) * 3 + c];
        const float v01 = lattice[(size_t(y0) * nx + x0 + 1) * 3 + c];
        const float v10 = lattice[(size_t(y0 + 1) * nx + x0) * 3 + c];
        const float v11 = lattice[(size_t(y0 + 1) * nx + x0 + 1) * 3 + c];
        const float top = v00 + (v01 - v00) * tx;
        const float bot = v10 + (v11 - v10) * tx;
        float& px = img.at(x, y, c);
        px = std::clamp(px + amplitude * (top + (bot - top) * ty), 0.0f, 1.0f);
      }
    }
  }
}

struct Fan {
  double ax = 0, ay = 0;   // apex
  double radius = 0;       // largest band radius
  double cosr = 1, sinr = 0;
  float color[2][3] = {};  // alternating band colors
};

// Approximate signed distance to a quarter-disc sector with the given
// apex, orientation, and radius (negative inside).
inline double sector_sdf(const Fan& f, double radius, double x, double y) {
  const double dx = x - f.ax;
  const double dy = y - f.ay;
  const double u = dx * f.cosr + dy * f.sinr;
  const double v = -dx * f.sinr + dy * f.cosr;
  const double arc = std::sqrt(dx * dx + dy * dy) - radius;
  return std::max(arc, std::max(-u, -v));
}

void paint_fan(ImageBuffer& img, const Fan& f, double level_ratio,
               double min_band_px, double soft) {
  const double reach = f.radius + soft + 1.0;
  const int x_lo = std::max(0, int(f.ax - reach));
  const int x_hi = std::min(img.width - 1, int(std::ceil(f.ax + reach)));
  const int y_lo = std::max(0, int(f.ay - reach));
  const int y_hi = std::min(img.height - 1, int(std::ceil(f.ay + reach)));
  std::vector<double> radii;
  for (double r = f.radius; r * (1.0 - level_ratio) >= min_band_px;
       r *= level_ratio)
    radii.push_back(r);
  if (radii.empty()) return;
  for (int y = y_lo; y <= y_hi; ++y)
    for (int x = x_lo; x <= x_hi; ++x) {
      // Composite the nested sectors outside-in; each soft-edged sector
      // paints over the one before it, and the radii shrink about a fixed
      // apex, so the signed distances only grow -- stop once clear of one.
      for (size_t level = 0; level < radii.size(); ++level) {
        const double sdf = sector_sdf(f, radii[level], double(x), double(y));
        if (sdf >= soft) break;
        const float alpha =
            float(std::clamp(0.5 - 0.5 * sdf / soft, 0.0, 1.0));
        const float* col = f.color[level & 1];
        for (int c = 0; c < 3; ++c) {
          float& px = img.at(x, y, c);
          px = px + (col[c] - px) * alpha;
        }
      }
    }
}

}  // namespace

ImageBuffer generate_texture(const TextureParams& params, uint64_t seed) {
  return generate_texture(params, seed, nullptr);
}

ImageBuffer generate_texture(const TextureParams& params, uint64_t seed,
                             std::vector<std::pair<double, double>>* apexes) {
  if (params.width < 8 || params.height < 8)
    throw argument_error("generate_texture: image must be at least 8x8");
  if (!(params.fan_pitch_frac > 0.0) || params.fan_pitch_frac > 1.0)
    throw argument_error("generate_texture: fan_pitch_frac must be in (0, 1]");
  if (!(params.level_ratio > 0.0) || params.level_ratio >= 1.0)
    throw argument_error("generate_texture: level_ratio must be in (0, 1)");
  Xoshiro256 rng(seed);
  ImageBuffer img(params.width, params.height, 3);

  // Mid-gray base plus two octaves of smooth color variation: a regional
  // color identity that survives magnification changes.
  for (float& v : img.data) v = 0.5f;
  add_value_noise(img, rng, 3, float(params.bg_amp));
  add_value_noise(img, rng, 7, float(0.35 * params.bg_amp));

  const double dim = double(std::min(params.width, params.height));
  const double pitch = params.fan_pitch_frac * dim;
  const double soft = std::max(0.6, params.soft_px);
  const int nx = std::max(1, int(std::lround(params.width / pitch)));
  const int ny = std::max(1, int(std::lround(params.height / pitch)));

  std::vector<Fan> fans;
  fans.reserve(size_t(nx) * ny);
  for (int gy = 0; gy < ny; ++gy)
    for (int gx = 0; gx < nx; ++gx) {
      Fan f;
      const double jit = params.jitter_frac * pitch;
      f.ax = (gx + 0.5) * params.width / nx + rng.uniform(-jit, jit);
      f.ay = (gy + 0.5) * params.height / ny + rng.uniform(-jit, jit);
      f.radius = params.fan_radius_frac * pitch;
      const double a = rng.uniform(0.0, 6.283185307179586);
      f.cosr = std::cos(a);
      f.sinr = std::sin(a);
      // Two saturated, well-separated band colors per fan: the local color
      // pair is the identity a blind-zoom matcher recognizes the apex by.
      for (int c = 0; c < 3; ++c) f.color[0][c] = float(rng.uniform(0.05, 0.95));
      for (int tries = 0; tries < 32; ++tries) {
        double sep = 0.0;
        for (int c = 0; c < 3; ++c) {
          f.color[1][c] = float(rng.uniform(0.05, 0.95));
          sep = std::max(sep, std::abs(double(f.color[1][c] - f.color[0][c])));
        }
        if (sep >= 0.4) break;
      }
      fans.push_back(f);
    }

  // Paint in shuffled order so occlusion between neighboring fans carries
  // no scanline bias.
  std::vector<size_t> order(fans.size());
  std::iota(order.begin(), order.end(), size_t(0));
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.next() % i]);
  for (size_t i : order)
    paint_fan(img, fans[i], params.level_ratio, params.min_band_px, soft);
  if (apexes) {
    apexes->clear();
    for (const Fan& f : fans) apexes->emplace_back(f.ax, f.ay);
  }

  if (params.noise_amp > 0.0) {
    const float amp = float(params.noise_amp);
    for (float& v : img.data)
      v = std::clamp(v + amp * float(rng.uniform(-1.0, 1.0)), 0.0f, 1.0f);
  }
  return img;
}

}  // namespace msreg
