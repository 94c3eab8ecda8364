#include "msreg/matching.hpp"

#include <algorithm>
#include <limits>

#include "msreg/errors.hpp"

namespace msreg {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Euclidean distance between two rows, accumulated in doubles in fixed
// index order so that d(a,b) == d(b,a) bit-for-bit.
double row_distance(const float* a, const float* b, int dim) {
  double acc = 0.0;
  for (int c = 0; c < dim; ++c) {
    const double diff = double(a[c]) - double(b[c]);
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

// All-pairs distance table for one level.
std::vector<double> level_table(const DescriptorLevel& a,
                                const DescriptorLevel& b) {
  std::vector<double> t(size_t(a.rows()) * b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j)
      t[size_t(i) * b.rows() + j] = row_distance(a.row(i), b.row(j), a.dim);
  return t;
}

} // namespace

FusedDistanceMatrix FusedDistanceMatrix::transposed() const {
  FusedDistanceMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_gate = col_gate;
  t.col_gate = row_gate;
  t.values.resize(values.size());
  for (int x = 0; x < rows; ++x)
    for (int y = 0; y < cols; ++y)
      t.values[size_t(y) * rows + x] = values[size_t(x) * cols + y];
  return t;
}

FusedDistanceMatrix fused_distance(const DescriptorPyramid& px,
                                   const DescriptorPyramid& py,
                                   const CornerGate& gx, const CornerGate& gy,
                                   const DistanceWeights& w) {
  if (px.f1.grid_h != py.f1.grid_h || px.f1.grid_w != py.f1.grid_w ||
      px.f1.dim != py.f1.dim || px.f2.dim != py.f2.dim ||
      px.f3.dim != py.f3.dim)
    throw shape_error("fused_distance: pyramids have mismatched shapes");
  if (gx.cells() != px.f1.rows() || gy.cells() != py.f1.rows())
    throw shape_error("fused_distance: gate size does not match pyramid");
  if (px.f2.grid_w * 2 != px.f1.grid_w || px.f3.grid_w * 4 != px.f1.grid_w)
    throw shape_error("fused_distance: pyramid parent grids inconsistent");

  const int n = px.f1.rows();
  const int m = py.f1.rows();
  FusedDistanceMatrix dm;
  dm.rows = n;
  dm.cols = m;
  dm.row_gate = gx.mask;
  dm.col_gate = gy.mask;
  dm.values.assign(size_t(n) * m, kInf);

  // Parent-level tables are tiny (196 and 49 cells); compute them densely.
  const std::vector<double> d2 = level_table(px.f2, py.f2);
  const std::vector<double> d3 = level_table(px.f3, py.f3);

  const int w1g = px.f1.grid_w;
  const int w2g = px.f2.grid_w;
  const int w3g = px.f3.grid_w;
  const int w1gy = py.f1.grid_w;
  const int w2gy = py.f2.grid_w;
  const int w3gy = py.f3.grid_w;

  for (int x = 0; x < n; ++x) {
    if (!gx.mask[x]) continue;
    const int xi = x / w1g, xj = x % w1g;
    const int x2 = (xi / 2) * w2g + (xj / 2);
    const int x3 = (xi / 4) * w3g + (xj / 4);
    const float* fx = px.f1.row(x);
    double* out_row = &dm.values[size_t(x) * m];
    for (int y = 0; y < m; ++y) {
      if (!gy.mask[y]) continue;
      const int yi = y / w1gy, yj = y % w1gy;
      const int y2 = (yi / 2) * w2gy + (yj / 2);
      const int y3 = (yi / 4) * w3gy + (yj / 4);
      const double d1 = row_distance(fx, py.f1.row(y), px.f1.dim);
      out_row[y] = w.w1 * d1 + w.w2 * d2[size_t(x2) * py.f2.rows() + y2] +
                   w.w3 * d3[size_t(x3) * py.f3.rows() + y3];
    }
  }
  return dm;
}

MatchSet match_oneway(const FusedDistanceMatrix& dm, int target_count,
                      double theta_step) {
  if (target_count < 1)
    throw argument_error("match_oneway: target_count must be >= 1");
  if (!(theta_step > 0.0))
    throw argument_error("match_oneway: theta_step must be positive");

  // Nearest and second-nearest finite distance per gated row; argmin ties
  // go to the smallest destination index via the strict < scan.
  std::vector<MatchPair> candidates;
  for (int x = 0; x < dm.rows; ++x) {
    if (!dm.row_gate[x]) continue;
    double best1 = kInf, best2 = kInf;
    int best_idx = -1;
    const double* row = &dm.values[size_t(x) * dm.cols];
    for (int y = 0; y < dm.cols; ++y) {
      const double v = row[y];
      if (v < best1) {
        best2 = best1;
        best1 = v;
        best_idx = y;
      } else if (v < best2) {
        best2 = v;
      }
    }
    if (best_idx < 0 || !std::isfinite(best2)) continue;
    MatchPair p;
    p.src = x;
    p.dst = best_idx;
    p.distance = best1;
    p.theta = best2 / std::max(best1, 1e-12);
    candidates.push_back(p);
  }
  if (candidates.empty())
    throw match_error("match_oneway: no source cell offered two finite "
                      "distances to rank");

  double theta_max = 0.0;
  for (const MatchPair& p : candidates)
    theta_max = std::max(theta_max, p.theta);

  // The selection loop lowers the cut from theta_max one step at a time,
  // recounting candidates with theta > cut, and stops as soon as the count
  // reaches target_count or the cut reaches the 1.0 floor. Evaluated in
  // closed form: candidate i first counts at step k_i, the smallest k with
  // theta_max - k*step < theta_i.
  auto steps_until_counted = [&](double theta) {
    double k = std::floor((theta_max - theta) / theta_step) + 1.0;
    if (k < 1.0) k = 1.0;
    // Float fix-up: nudge k so it is exactly the first counting step.
    while (k > 1.0 && theta_max - (k - 1.0) * theta_step < theta) k -= 1.0;
    while (!(theta_max - k * theta_step < theta)) k += 1.0;
    return k;
  };

  // Step at which the cut hits the floor and the loop gives up.
  double k_floor = std::ceil((theta_max - 1.0) / theta_step);
  if (k_floor < 1.0) k_floor = 1.0;
  while (k_floor > 1.0 && theta_max - (k_floor - 1.0) * theta_step <= 1.0)
    k_floor -= 1.0;
  while (theta_max - k_floor * theta_step > 1.0) k_floor += 1.0;

  double k_final = k_floor;
  if (int(candidates.size()) >= target_count) {
    std::vector<double> ks(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i)
      ks[i] = steps_until_counted(candidates[i].theta);
    std::nth_element(ks.begin(), ks.begin() + (target_count - 1), ks.end());
    k_final = std::min(k_floor, ks[target_count - 1]);
  }
  const double theta_cut = std::max(theta_max - k_final * theta_step, 1.0);

  MatchSet out;
  out.direction = MatchSet::Direction::forward;
  out.theta_cut_used = theta_cut;
  for (const MatchPair& p : candidates)
    if (p.theta > theta_cut) out.pairs.push_back(p);
  return out;
}

MatchSet match_bidirectional(const FusedDistanceMatrix& dm_xy,
                             const FusedDistanceMatrix& dm_yx,
                             int target_count, double theta_step) {
  const MatchSet fwd = match_oneway(dm_xy, target_count, theta_step);
  MatchSet bwd = match_oneway(dm_yx, target_count, theta_step);
  bwd.direction = MatchSet::Direction::backward;

  std::vector<uint8_t> reverse(size_t(dm_xy.rows) * dm_xy.cols, 0);
  for (const MatchPair& p : bwd.pairs)
    reverse[size_t(p.dst) * dm_xy.cols + p.src] = 1;

  MatchSet out;
  out.direction = MatchSet::Direction::intersected;
  out.theta_cut_used = fwd.theta_cut_used;
  for (const MatchPair& p : fwd.pairs)
    if (reverse[size_t(p.src) * dm_xy.cols + p.dst]) out.pairs.push_back(p);
  return out;
}

} // namespace msreg
