#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msreg/geometry.hpp"
#include "msreg/image.hpp"
#include "msreg/pipeline.hpp"

namespace msreg {

// One synthesized evaluation pair. The wide frame is the whole source
// downscaled by the linear factor sqrt(scale_ratio); the narrow frame is
// the central crop of the source at full resolution, so both share dims
// and differ in pixel count over the common region by scale_ratio.
// Both ground-truth directions are provided to avoid orientation slips:
// wide_to_narrow carries the upscale factor sqrt(scale_ratio).
struct SynthesizedPair {
  ImageBuffer wide;    // plays the reference image I_x
  ImageBuffer narrow;  // plays the dynamic image I_y
  Homography wide_to_narrow;
  Homography narrow_to_wide;
};

// wb_mode: "none", "gain" (per-channel gains drawn from [0.5,1.5] with
// `seed`), or "separate:K" with K in 0..2 (channel copy).
SynthesizedPair synthesize_pair(const ImageBuffer& source, int scale_ratio,
                                const std::string& wb_mode, uint64_t seed);

// TP counts pairs whose destination lands within tol_px of gt(source);
// everything else is FP.
struct MatchScore {
  int tp = 0;
  int fp = 0;
  double tpr() const { return tp + fp > 0 ? double(tp) / (tp + fp) : 0.0; }
};
MatchScore score_matches(const std::vector<PointPair>& pairs,
                         const Homography& gt, double tol_px = 3.0);

struct EvalRow {
  std::string pair_id;
  int scale = 0;
  std::string wb;
  double tpr = 0.0;
  int tp = 0;
  int fp = 0;
  double time_ms = 0.0;
  bool failed = false;
  std::string note; // failure stage or IO error
};

struct ScaleAggregate {
  int scale = 0;
  int rows = 0;
  double mean_tpr = 0.0;
  double mean_time_ms = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<ScaleAggregate> by_scale;
  double tol_px = 3.0;
};

struct EvalManifest {
  std::vector<std::string> images;
  std::vector<int> scales;
  std::vector<std::string> wb_modes;
  std::vector<uint64_t> seeds;
  double tol_px = 3.0;
};

EvalManifest load_manifest(const std::string& path);

// Registers every (image x scale x wb x seed) combination and scores the
// consensus matches against the synthetic ground truth. IO or
// registration failures become rows with tpr 0 and a note; the run
// continues. When zero_times is set all reported times are written as 0
// for byte-reproducible output.
EvalReport run_benchmark(const EvalManifest& manifest, const Registrar& reg,
                         bool zero_times = false);

std::string eval_report_csv(const EvalReport& report);
void compute_aggregates(EvalReport& report);

} // namespace msreg
