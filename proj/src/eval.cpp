#include "msreg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "msreg/errors.hpp"
#include "msreg/rng.hpp"

namespace msreg {
namespace {

ChannelTransform wb_from_mode(const std::string& mode, uint64_t seed) {
  if (mode.empty() || mode == "none") return ChannelTransform::identity_transform();
  if (mode == "gain") {
    Xoshiro256 rng(seed ^ 0x77b5dcc1f0a1d2e3ULL);
    const double r = rng.uniform(0.5, 1.5);
    const double g = rng.uniform(0.5, 1.5);
    const double b = rng.uniform(0.5, 1.5);
    return ChannelTransform::gain3(r, g, b);
  }
  if (mode.rfind("separate:", 0) == 0) {
    const std::string tail = mode.substr(9);
    if (tail.size() == 1 && tail[0] >= '0' && tail[0] <= '2')
      return ChannelTransform::separate(tail[0] - '0');
  }
  throw argument_error("unknown white-balance mode '" + mode +
                       "' (expected none, gain, or separate:0..2)");
}

} // namespace

SynthesizedPair synthesize_pair(const ImageBuffer& source, int scale_ratio,
                                const std::string& wb_mode, uint64_t seed) {
  if (scale_ratio != 16 && scale_ratio != 64 && scale_ratio != 256)
    throw argument_error("synthesize_pair: scale_ratio must be 16, 64 or "
                         "256, got " + std::to_string(scale_ratio));
  const int s = int(std::lround(std::sqrt(double(scale_ratio))));
  const int cw = source.width / s;
  const int ch = source.height / s;
  if (cw < 64 || ch < 64)
    throw argument_error(
        "synthesize_pair: source too small for scale ratio " +
        std::to_string(scale_ratio) + "; need at least " +
        std::to_string(64 * s) + "px per side, got " +
        std::to_string(source.width) + "x" + std::to_string(source.height));

  const int x0 = (source.width - cw) / 2;
  const int y0 = (source.height - ch) / 2;

  SynthesizedPair out;
  ImageBuffer narrow = crop(source, x0, y0, cw, ch);
  const ChannelTransform wb = wb_from_mode(wb_mode, seed);
  out.narrow = apply_channel_transform(expand_to_rgb(narrow), wb);
  out.wide = resize_bilinear(source, cw, ch);

  // narrow (x,y) sits at source (x0+x, y0+y); the wide frame resamples the
  // source with half-pixel centers, so source u maps to (u+0.5)*cw/W - 0.5.
  const double kx = double(cw) / source.width;
  const double ky = double(ch) / source.height;
  Homography n2w;
  n2w.h[0] = kx;
  n2w.h[2] = (x0 + 0.5) * kx - 0.5;
  n2w.h[4] = ky;
  n2w.h[5] = (y0 + 0.5) * ky - 0.5;
  out.narrow_to_wide = n2w;
  out.wide_to_narrow = inverse(n2w);
  return out;
}

MatchScore score_matches(const std::vector<PointPair>& pairs,
                         const Homography& gt, double tol_px) {
  MatchScore score;
  for (const PointPair& p : pairs) {
    Vec2 mapped;
    try {
      mapped = map_point(gt, p.src);
    } catch (const point_at_infinity_error&) {
      ++score.fp;
      continue;
    }
    if (distance(mapped, p.dst) <= tol_px)
      ++score.tp;
    else
      ++score.fp;
  }
  return score;
}

EvalManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open manifest " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw format_error("manifest " + path + " is not valid JSON: " + e.what());
  }

  EvalManifest m;
  try {
    for (const auto& v : j.at("images")) m.images.push_back(v.get<std::string>());
    for (const auto& v : j.at("scales")) m.scales.push_back(v.get<int>());
    if (j.contains("wb_modes"))
      for (const auto& v : j["wb_modes"]) m.wb_modes.push_back(v.get<std::string>());
    if (j.contains("seeds"))
      for (const auto& v : j["seeds"]) m.seeds.push_back(v.get<uint64_t>());
    if (j.contains("tol_px")) m.tol_px = j["tol_px"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw format_error("manifest " + path + " has a bad field: " + e.what());
  }
  if (m.wb_modes.empty()) m.wb_modes.push_back("none");
  if (m.seeds.empty()) m.seeds.push_back(1);
  if (m.images.empty()) throw config_error("empty manifest: no images listed");
  if (m.scales.empty()) throw config_error("empty manifest: no scales listed");
  if (!(m.tol_px > 0.0)) throw config_error("manifest tol_px must be positive");
  return m;
}

EvalReport run_benchmark(const EvalManifest& manifest, const Registrar& reg,
                         bool zero_times) {
  EvalReport report;
  report.tol_px = manifest.tol_px;
  for (const std::string& image_path : manifest.images) {
    for (int scale : manifest.scales) {
      for (const std::string& wb : manifest.wb_modes) {
        for (uint64_t seed : manifest.seeds) {
          EvalRow row;
          row.pair_id = image_path + "@" + std::to_string(seed);
          row.scale = scale;
          row.wb = wb;
          try {
            const ImageBuffer source = load_image(image_path);
            const SynthesizedPair pair =
                synthesize_pair(source, scale, wb, seed);
            const RegistrationResult res =
                reg.register_pair(pair.wide, pair.narrow);
            row.time_ms = zero_times ? 0.0 : res.timings_ms.total;
            if (!res.ok) {
              row.failed = true;
              row.note = "registration failed at " + res.failure_stage;
            } else {
              // Accepted pairs live in the 448 working frames; express the
              // ground truth there so tol_px is in wide-frame pixels.
              const int fr = reg.spec().input_size;
              const Homography gt448 = compose(
                  inverse(frame_to_original(pair.wide.width, pair.wide.height,
                                            fr)),
                  compose(pair.narrow_to_wide,
                          frame_to_original(pair.narrow.width,
                                            pair.narrow.height, fr)));
              const MatchScore score =
                  score_matches(res.accepted, gt448, manifest.tol_px);
              row.tp = score.tp;
              row.fp = score.fp;
              row.tpr = score.tpr();
            }
          } catch (const error& e) {
            row.failed = true;
            row.note = e.what();
          }
          report.rows.push_back(std::move(row));
        }
      }
    }
  }
  compute_aggregates(report);
  return report;
}

void compute_aggregates(EvalReport& report) {
  std::map<int, ScaleAggregate> agg;
  for (const EvalRow& row : report.rows) {
    ScaleAggregate& a = agg[row.scale];
    a.scale = row.scale;
    a.rows += 1;
    a.mean_tpr += row.tpr;
    a.mean_time_ms += row.time_ms;
  }
  report.by_scale.clear();
  for (auto& [scale, a] : agg) {
    a.mean_tpr /= double(a.rows);
    a.mean_time_ms /= double(a.rows);
    report.by_scale.push_back(a);
  }
}

std::string eval_report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "pair,scale,wb,TPR,TP,FP,time_ms\n";
  out.setf(std::ios::fixed);
  for (const EvalRow& row : report.rows) {
    out.precision(4);
    out << row.pair_id << ',' << row.scale << ',' << row.wb << ',' << row.tpr
        << ',' << row.tp << ',' << row.fp << ',';
    out.precision(3);
    out << row.time_ms << '\n';
  }
  return out.str();
}

} // namespace msreg
