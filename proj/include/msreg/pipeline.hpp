#pragma once

#include <array>
#include <string>
#include <vector>

#include "msreg/features.hpp"
#include "msreg/geometry.hpp"
#include "msreg/image.hpp"
#include "msreg/matching.hpp"
#include "msreg/network.hpp"

namespace msreg {

struct PipelineConfig {
  double harris_k = 0.04;
  double harris_threshold_rel = 0.01;
  int harris_nms_radius = 4;
  int target_count = 128;
  double theta_step = 0.01;
  int ransac_iters = 2000;
  double ransac_px = 3.0;
  uint64_t ransac_seed = 1;
  DistanceWeights distance_weights;
};

struct StageTimings {
  double resize = 0.0;
  double forward = 0.0;
  double harris = 0.0;
  double distance = 0.0;
  double match = 0.0;
  double ransac = 0.0;
  double total = 0.0;
};

// Outcome of one registration. On success `homography` maps the dynamic
// frame's 448 coordinates into the reference frame's 448 coordinates, and
// the ROI quantities are expressed in the reference image's original
// pixel grid. On failure `failure_stage` names the first stage that could
// not proceed ("harris", "match" or "ransac").
struct RegistrationResult {
  bool ok = false;
  std::string failure_stage;
  std::string failure_detail;

  Homography homography;                  // iy 448-frame -> ix 448-frame
  std::array<Vec2, 4> roi_corners{};      // iy frame corners in ix original px
  Vec2 roi_center;                        // the aim coordinate Y
  int match_count = 0;                    // mutual matches fed to RANSAC
  std::vector<PointPair> correspondences; // all mutual pairs, 448 frames
  std::vector<PointPair> accepted;        // consensus inliers, 448 frames
  StageTimings timings_ms;
};

// Immutable pipeline: weights + parameters fixed at construction, every
// call is independent. The reference side of a pair can be prepared once
// and reused across many registrations (the tracking loop does this).
class Registrar {
public:
  Registrar(WeightBundle weights, PipelineConfig cfg = {});

  struct Prepared {
    ImageBuffer frame;        // 448x448 RGB
    DescriptorPyramid pyramid;
    CornerGate gate;
    int orig_w = 0;
    int orig_h = 0;
    double resize_ms = 0.0;
    double forward_ms = 0.0;
    double harris_ms = 0.0;
  };

  Prepared prepare(const ImageBuffer& img) const;
  RegistrationResult register_prepared(const Prepared& ix,
                                       const Prepared& iy) const;
  RegistrationResult register_pair(const ImageBuffer& ix,
                                   const ImageBuffer& iy) const;

  const PipelineConfig& config() const { return cfg_; }
  const NetworkSpec& spec() const { return spec_; }

private:
  NetworkSpec spec_;
  WeightBundle weights_;
  PipelineConfig cfg_;
};

} // namespace msreg
