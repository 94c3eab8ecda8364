#include "msreg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msreg/errors.hpp"
#include "msreg/rng.hpp"

namespace msreg {

double Homography::det() const {
  return h[0] * (h[4] * h[8] - h[5] * h[7]) -
         h[1] * (h[3] * h[8] - h[5] * h[6]) +
         h[2] * (h[3] * h[7] - h[4] * h[6]);
}

void jacobi_eigen_symmetric(std::vector<double> a, int n,
                            std::vector<double>& values,
                            std::vector<double>& vectors) {
  vectors.assign(size_t(n) * n, 0.0);
  for (int i = 0; i < n; ++i) vectors[size_t(i) * n + i] = 1.0;

  auto at = [&](std::vector<double>& m, int r, int c) -> double& {
    return m[size_t(r) * n + c];
  };

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += at(a, p, q) * at(a, p, q);
    if (off < 1e-300) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(a, p, q);
        if (apq == 0.0) continue;
        const double app = at(a, p, p);
        const double aqq = at(a, q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0)
                             ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                             : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (int k = 0; k < n; ++k) {
          const double akp = at(a, k, p);
          const double akq = at(a, k, q);
          at(a, k, p) = c * akp - s * akq;
          at(a, k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(a, p, k);
          const double aqk = at(a, q, k);
          at(a, p, k) = c * apk - s * aqk;
          at(a, q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = at(vectors, k, p);
          const double vkq = at(vectors, k, q);
          at(vectors, k, p) = c * vkp - s * vkq;
          at(vectors, k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  values.resize(size_t(n));
  for (int i = 0; i < n; ++i) values[size_t(i)] = a[size_t(i) * n + i];
}

namespace {

struct Normalizer {
  double cx = 0.0, cy = 0.0, scale = 1.0;

  Vec2 apply(const Vec2& p) const {
    return {(p.x - cx) * scale, (p.y - cy) * scale};
  }
};

Normalizer fit_normalizer(const std::vector<PointPair>& pairs, bool src) {
  Normalizer nm;
  for (const PointPair& p : pairs) {
    const Vec2& v = src ? p.src : p.dst;
    nm.cx += v.x;
    nm.cy += v.y;
  }
  nm.cx /= double(pairs.size());
  nm.cy /= double(pairs.size());
  double rms = 0.0;
  for (const PointPair& p : pairs) {
    const Vec2& v = src ? p.src : p.dst;
    const double dx = v.x - nm.cx;
    const double dy = v.y - nm.cy;
    rms += dx * dx + dy * dy;
  }
  rms = std::sqrt(rms / double(pairs.size()));
  nm.scale = rms > 1e-12 ? std::sqrt(2.0) / rms : 1.0;
  return nm;
}

void mat3_mul(const double* a, const double* b, double* out) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      out[r * 3 + c] = a[r * 3 + 0] * b[0 * 3 + c] +
                       a[r * 3 + 1] * b[1 * 3 + c] +
                       a[r * 3 + 2] * b[2 * 3 + c];
}

} // namespace

Homography estimate_dlt(const std::vector<PointPair>& pairs) {
  if (pairs.size() < 4)
    throw underdetermined_error("estimate_dlt: need at least 4 pairs, got " +
                                std::to_string(pairs.size()));

  const Normalizer ns = fit_normalizer(pairs, true);
  const Normalizer nd = fit_normalizer(pairs, false);

  // Normal matrix AtA of the 2N x 9 DLT system.
  double ata[81] = {0};
  for (const PointPair& pr : pairs) {
    const Vec2 s = ns.apply(pr.src);
    const Vec2 d = nd.apply(pr.dst);
    const double r1[9] = {s.x, s.y, 1, 0, 0, 0, -d.x * s.x, -d.x * s.y, -d.x};
    const double r2[9] = {0, 0, 0, s.x, s.y, 1, -d.y * s.x, -d.y * s.y, -d.y};
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j)
        ata[i * 9 + j] += r1[i] * r1[j] + r2[i] * r2[j];
  }

  std::vector<double> evals, evecs;
  jacobi_eigen_symmetric(std::vector<double>(ata, ata + 81), 9, evals, evecs);

  int smallest = 0, second = -1;
  double lmax = 0.0;
  for (int i = 0; i < 9; ++i) {
    lmax = std::max(lmax, std::abs(evals[i]));
    if (std::abs(evals[i]) < std::abs(evals[smallest])) smallest = i;
  }
  for (int i = 0; i < 9; ++i) {
    if (i == smallest) continue;
    if (second < 0 || std::abs(evals[i]) < std::abs(evals[second])) second = i;
  }
  // Two (near-)zero eigenvalues mean the system is rank-deficient: the
  // points fail to pin down a unique plane transform.
  if (std::abs(evals[second]) <= 1e-10 * std::max(lmax, 1e-300))
    throw degeneracy_error("estimate_dlt: degenerate point configuration");

  double hn[9];
  for (int i = 0; i < 9; ++i) hn[i] = evecs[size_t(i) * 9 + smallest];

  // Denormalize: H = Td^-1 * Hn * Ts.
  const double ts[9] = {ns.scale, 0, -ns.scale * ns.cx,
                        0, ns.scale, -ns.scale * ns.cy,
                        0, 0, 1};
  const double td_inv[9] = {1.0 / nd.scale, 0, nd.cx,
                            0, 1.0 / nd.scale, nd.cy,
                            0, 0, 1};
  double tmp[9], hout[9];
  mat3_mul(hn, ts, tmp);
  mat3_mul(td_inv, tmp, hout);

  Homography out;
  const double w = hout[8];
  if (std::abs(w) > 1e-12) {
    for (int i = 0; i < 9; ++i) out.h[i] = hout[i] / w;
  } else {
    for (int i = 0; i < 9; ++i) out.h[i] = hout[i];
  }
  if (std::abs(out.det()) < 1e-12)
    throw degeneracy_error("estimate_dlt: singular solution");
  return out;
}

Vec2 map_point(const Homography& h, const Vec2& p) {
  const double w = h.h[6] * p.x + h.h[7] * p.y + h.h[8];
  if (std::abs(w) < 1e-12)
    throw point_at_infinity_error("map_point: point maps to infinity");
  return {(h.h[0] * p.x + h.h[1] * p.y + h.h[2]) / w,
          (h.h[3] * p.x + h.h[4] * p.y + h.h[5]) / w};
}

Homography inverse(const Homography& h) {
  const double d = h.det();
  if (std::abs(d) < 1e-300)
    throw degeneracy_error("inverse: homography is singular");
  const double* m = h.h;
  Homography out;
  out.h[0] = (m[4] * m[8] - m[5] * m[7]) / d;
  out.h[1] = (m[2] * m[7] - m[1] * m[8]) / d;
  out.h[2] = (m[1] * m[5] - m[2] * m[4]) / d;
  out.h[3] = (m[5] * m[6] - m[3] * m[8]) / d;
  out.h[4] = (m[0] * m[8] - m[2] * m[6]) / d;
  out.h[5] = (m[2] * m[3] - m[0] * m[5]) / d;
  out.h[6] = (m[3] * m[7] - m[4] * m[6]) / d;
  out.h[7] = (m[1] * m[6] - m[0] * m[7]) / d;
  out.h[8] = (m[0] * m[4] - m[1] * m[3]) / d;
  if (std::abs(out.h[8]) > 1e-12) {
    const double w = out.h[8];
    for (double& v : out.h) v /= w;
  }
  return out;
}

Homography compose(const Homography& a, const Homography& b) {
  Homography out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      out.h[r * 3 + c] = a.h[r * 3 + 0] * b.h[0 * 3 + c] +
                         a.h[r * 3 + 1] * b.h[1 * 3 + c] +
                         a.h[r * 3 + 2] * b.h[2 * 3 + c];
  const double w = out.h[8];
  if (std::abs(w) > 1e-12)
    for (double& v : out.h) v /= w;
  return out;
}

Homography frame_to_original(int orig_w, int orig_h, int frame) {
  const double kx = double(orig_w) / frame;
  const double ky = double(orig_h) / frame;
  Homography s;
  s.h[0] = kx;
  s.h[2] = 0.5 * kx - 0.5;
  s.h[4] = ky;
  s.h[5] = 0.5 * ky - 0.5;
  return s;
}

Homography ransac_homography(const std::vector<PointPair>& pairs, int iters,
                             double inlier_px, uint64_t seed) {
  if (pairs.size() < 4)
    throw underdetermined_error("ransac_homography: need at least 4 pairs, "
                                "got " + std::to_string(pairs.size()));
  if (iters < 1) throw argument_error("ransac_homography: iters must be >= 1");
  if (!(inlier_px > 0.0))
    throw argument_error("ransac_homography: inlier_px must be positive");

  Xoshiro256 rng(seed);
  const size_t n = pairs.size();

  auto count_inliers = [&](const Homography& h, std::vector<int>* keep) {
    int count = 0;
    for (size_t i = 0; i < n; ++i) {
      Vec2 mapped;
      try {
        mapped = map_point(h, pairs[i].src);
      } catch (const point_at_infinity_error&) {
        continue;
      }
      if (distance(mapped, pairs[i].dst) < inlier_px) {
        ++count;
        if (keep) keep->push_back(int(i));
      }
    }
    return count;
  };

  int best_count = 0;
  std::vector<int> best_inliers;
  for (int it = 0; it < iters; ++it) {
    int idx[4];
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = int(rng.below(n));
        fresh = true;
        for (int j = 0; j < k; ++j) fresh = fresh && idx[j] != idx[k];
      } while (!fresh);
    }
    std::vector<PointPair> sample = {pairs[idx[0]], pairs[idx[1]],
                                     pairs[idx[2]], pairs[idx[3]]};
    Homography h;
    try {
      h = estimate_dlt(sample);
    } catch (const degeneracy_error&) {
      continue; // collinear draw, try the next sample
    }
    std::vector<int> inl;
    const int count = count_inliers(h, &inl);
    if (count > best_count) {
      best_count = count;
      best_inliers = std::move(inl);
    }
  }
  if (best_count < 4)
    throw consensus_error("ransac_homography: no 4-inlier consensus found");

  std::vector<PointPair> consensus;
  consensus.reserve(best_inliers.size());
  for (int i : best_inliers) consensus.push_back(pairs[size_t(i)]);
  Homography refit = estimate_dlt(consensus);
  refit.inliers = best_inliers;

  double err = 0.0;
  for (int i : best_inliers)
    err += distance(map_point(refit, pairs[size_t(i)].src),
                    pairs[size_t(i)].dst);
  refit.mean_reproj_error = err / double(best_inliers.size());
  return refit;
}

ImageBuffer warp_image(const ImageBuffer& img, const Homography& h, int out_w,
                       int out_h) {
  if (out_w <= 0 || out_h <= 0)
    throw argument_error("warp_image: output size must be positive");
  const Homography inv = inverse(h);
  ImageBuffer out(out_w, out_h, img.channels);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      Vec2 src;
      try {
        src = map_point(inv, Vec2(double(x), double(y)));
      } catch (const point_at_infinity_error&) {
        continue;
      }
      if (src.x < 0.0 || src.y < 0.0 || src.x > double(img.width - 1) ||
          src.y > double(img.height - 1))
        continue;
      const int x0 = int(src.x);
      const int y0 = int(src.y);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const int y1 = std::min(y0 + 1, img.height - 1);
      const float fx = float(src.x - x0);
      const float fy = float(src.y - y0);
      for (int c = 0; c < img.channels; ++c) {
        const float top =
            img.at(x0, y0, c) + (img.at(x1, y0, c) - img.at(x0, y0, c)) * fx;
        const float bot =
            img.at(x0, y1, c) + (img.at(x1, y1, c) - img.at(x0, y1, c)) * fx;
        out.at(x, y, c) = top + (bot - top) * fy;
      }
    }
  }
  return out;
}

} // namespace msreg
