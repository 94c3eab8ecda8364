#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "msreg/features.hpp"

namespace msreg {

// Level weights of the fused distance
//   d(x,y) = w1*d1(x,y) + w2*d2(x,y) + w3*d3(x,y).
// The defaults 2 : sqrt(2) : 1 offset the 128/256/512 descriptor widths,
// which is why the descriptors themselves stay unnormalized.
struct DistanceWeights {
  double w1 = 2.0;
  double w2 = std::sqrt(2.0);
  double w3 = 1.0;
};

// Dense fused-distance table between level-1 cells of two pyramids.
// Entries are +infinity whenever either cell failed its corner gate.
struct FusedDistanceMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;     // rows * cols
  std::vector<uint8_t> row_gate;  // rows
  std::vector<uint8_t> col_gate;  // cols

  double at(int x, int y) const { return values[size_t(x) * cols + y]; }

  // Swapped-direction matrix; valid because the fused distance is
  // symmetric in its two arguments.
  FusedDistanceMatrix transposed() const;
};

struct MatchPair {
  int src = 0;       // level-1 cell index in the source grid
  int dst = 0;       // level-1 cell index in the destination grid
  double distance = 0.0;
  double theta = 0.0; // second-best / best distance ratio
};

struct MatchSet {
  enum class Direction { forward, backward, intersected };
  std::vector<MatchPair> pairs;
  double theta_cut_used = 0.0; // final ratio threshold actually applied
  Direction direction = Direction::forward;
};

FusedDistanceMatrix fused_distance(const DescriptorPyramid& px,
                                   const DescriptorPyramid& py,
                                   const CornerGate& gx, const CornerGate& gy,
                                   const DistanceWeights& w = {});

// Ratio-test selection: each gated row contributes its nearest neighbor
// with theta = dis2/dis1; the ratio threshold starts at max(theta) and
// drops in `theta_step` decrements until at least `target_count`
// candidates clear it or the threshold reaches the 1.0 floor.
MatchSet match_oneway(const FusedDistanceMatrix& dm, int target_count = 128,
                      double theta_step = 0.01);

// Keep forward pairs whose reversed pair also survives the backward pass.
MatchSet match_bidirectional(const FusedDistanceMatrix& dm_xy,
                             const FusedDistanceMatrix& dm_yx,
                             int target_count = 128, double theta_step = 0.01);

} // namespace msreg
