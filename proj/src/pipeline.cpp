#include "msreg/pipeline.hpp"

#include <chrono>

#include "msreg/errors.hpp"

namespace msreg {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

} // namespace

Registrar::Registrar(WeightBundle weights, PipelineConfig cfg)
    : spec_(NetworkSpec::standard()), weights_(std::move(weights)),
      cfg_(cfg) {
  const auto shapes = spec_.conv_shapes();
  if (weights_.layers.size() != shapes.size())
    throw config_error("registrar: weight bundle layer count mismatch");
}

Registrar::Prepared Registrar::prepare(const ImageBuffer& img) const {
  if (img.width < 64 || img.height < 64)
    throw argument_error("registrar: images must be at least 64x64, got " +
                         std::to_string(img.width) + "x" +
                         std::to_string(img.height));
  Prepared p;
  p.orig_w = img.width;
  p.orig_h = img.height;

  auto t0 = Clock::now();
  ImageBuffer rgb = expand_to_rgb(img);
  p.frame = resize_bilinear(rgb, spec_.input_size, spec_.input_size);
  p.resize_ms = ms_since(t0);

  t0 = Clock::now();
  const auto taps = forward_taps(p.frame, spec_, weights_);
  p.pyramid = build_pyramid(taps);
  p.pyramid.source_w = img.width;
  p.pyramid.source_h = img.height;
  p.forward_ms = ms_since(t0);

  t0 = Clock::now();
  p.gate = harris_corners(p.frame, cfg_.harris_k, cfg_.harris_threshold_rel,
                          cfg_.harris_nms_radius);
  p.harris_ms = ms_since(t0);
  return p;
}

RegistrationResult Registrar::register_prepared(const Prepared& ix,
                                                const Prepared& iy) const {
  const auto t_total = Clock::now();
  RegistrationResult res;
  res.timings_ms.resize = ix.resize_ms + iy.resize_ms;
  res.timings_ms.forward = ix.forward_ms + iy.forward_ms;
  res.timings_ms.harris = ix.harris_ms + iy.harris_ms;

  auto fail = [&](const std::string& stage, const std::string& detail) {
    res.ok = false;
    res.failure_stage = stage;
    res.failure_detail = detail;
    res.timings_ms.total = res.timings_ms.resize + res.timings_ms.forward +
                           res.timings_ms.harris + ms_since(t_total);
    return res;
  };

  if (ix.gate.corners.empty())
    return fail("harris", "reference image has no corner cells");
  if (iy.gate.corners.empty())
    return fail("harris", "dynamic image has no corner cells");

  // Matching runs dynamic -> reference so the fitted homography maps the
  // dynamic frame into the reference frame.
  auto t0 = Clock::now();
  FusedDistanceMatrix fwd;
  try {
    fwd = fused_distance(iy.pyramid, ix.pyramid, iy.gate, ix.gate,
                         cfg_.distance_weights);
  } catch (const error& e) {
    return fail("distance", e.what());
  }
  const FusedDistanceMatrix bwd = fwd.transposed();
  res.timings_ms.distance = ms_since(t0);

  t0 = Clock::now();
  MatchSet mutual;
  try {
    mutual = match_bidirectional(fwd, bwd, cfg_.target_count, cfg_.theta_step);
  } catch (const error& e) {
    res.timings_ms.match = ms_since(t0);
    return fail("match", e.what());
  }
  res.timings_ms.match = ms_since(t0);

  // Every matched cell passed its gate, so it owns at least one corner;
  // the strongest corner localizes the cell-level match at pixel scale.
  res.correspondences.reserve(mutual.pairs.size());
  for (const MatchPair& mp : mutual.pairs) {
    const Corner& cs = iy.gate.corners[size_t(iy.gate.cell_strongest[mp.src])];
    const Corner& cd = ix.gate.corners[size_t(ix.gate.cell_strongest[mp.dst])];
    res.correspondences.push_back(
        {Vec2(double(cs.x), double(cs.y)), Vec2(double(cd.x), double(cd.y))});
  }
  res.match_count = int(res.correspondences.size());
  if (res.match_count < 4)
    return fail("match", "only " + std::to_string(res.match_count) +
                             " mutual matches; homography needs 4");

  t0 = Clock::now();
  Homography h;
  try {
    h = ransac_homography(res.correspondences, cfg_.ransac_iters,
                          cfg_.ransac_px, cfg_.ransac_seed);
  } catch (const error& e) {
    res.timings_ms.ransac = ms_since(t0);
    return fail("ransac", e.what());
  }
  res.timings_ms.ransac = ms_since(t0);

  res.accepted.reserve(h.inliers.size());
  for (int i : h.inliers) res.accepted.push_back(res.correspondences[size_t(i)]);

  res.homography = h;
  const int frame = spec_.input_size;
  const Homography to_orig = frame_to_original(ix.orig_w, ix.orig_h, frame);
  const Homography full = compose(to_orig, h);
  const double lo = 0.0, hi = double(frame - 1);
  const Vec2 corners[4] = {{lo, lo}, {hi, lo}, {hi, hi}, {lo, hi}};
  try {
    for (int i = 0; i < 4; ++i) res.roi_corners[size_t(i)] = map_point(full, corners[i]);
    res.roi_center = map_point(full, Vec2((lo + hi) / 2.0, (lo + hi) / 2.0));
  } catch (const point_at_infinity_error& e) {
    return fail("ransac", std::string("degenerate homography: ") + e.what());
  }

  res.ok = true;
  res.timings_ms.total = res.timings_ms.resize + res.timings_ms.forward +
                         res.timings_ms.harris + res.timings_ms.distance +
                         res.timings_ms.match + res.timings_ms.ransac;
  return res;
}

RegistrationResult Registrar::register_pair(const ImageBuffer& ix,
                                            const ImageBuffer& iy) const {
  const Prepared px = prepare(ix);
  const Prepared py = prepare(iy);
  return register_prepared(px, py);
}

} // namespace msreg
