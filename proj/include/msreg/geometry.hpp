#pragma once

#include <cstdint>
#include <vector>

#include "msreg/image.hpp"
#include "msreg/vec2.hpp"

namespace msreg {

// Plane projective transform, row-major 3x3, scaled so h[8] = 1 whenever
// that entry is nonzero.
struct Homography {
  double h[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::vector<int> inliers;        // indices into the fitted pair list
  double mean_reproj_error = 0.0;  // pixels, over the inlier set

  static Homography identity() { return {}; }
  double det() const;
};

// A correspondence src -> dst in pixel coordinates.
struct PointPair {
  Vec2 src;
  Vec2 dst;
};

// Least-squares homography via the normalized direct linear transform:
// each point set is translated to centroid zero and scaled to RMS radius
// sqrt(2); the 9-d null direction comes from a Jacobi eigensolve of the
// normal matrix.
Homography estimate_dlt(const std::vector<PointPair>& pairs);

// Seeded 4-sample consensus loop; score counts pairs with forward-transfer
// error below inlier_px, the winner is refit on its whole consensus set.
Homography ransac_homography(const std::vector<PointPair>& pairs,
                             int iters = 2000, double inlier_px = 3.0,
                             uint64_t seed = 1);

Vec2 map_point(const Homography& h, const Vec2& p);

Homography inverse(const Homography& h);

// a∘b: apply b first, then a; the result is rescaled so h[8] = 1.
Homography compose(const Homography& a, const Homography& b);

// Affine map from square working-frame pixel centers to original-image
// pixel centers, matching the bilinear-resize half-pixel convention.
Homography frame_to_original(int orig_w, int orig_h, int frame);

// Inverse-mapping warp with bilinear sampling; samples outside the source
// image read as zero. `h` maps source coordinates into output coordinates.
ImageBuffer warp_image(const ImageBuffer& img, const Homography& h, int out_w,
                       int out_h);

// Symmetric eigensolve helper (cyclic Jacobi) exposed for testing:
// `a` is n*n row-major symmetric storage; on return eigenvalues are in
// `values` and the matching eigenvectors are the columns of `vectors`.
void jacobi_eigen_symmetric(std::vector<double> a, int n,
                            std::vector<double>& values,
                            std::vector<double>& vectors);

} // namespace msreg
