#include "msreg/serialize.hpp"

namespace msreg {

std::string base64_encode(const void* data, size_t len) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::string out;
  out.reserve((len + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= len; i += 3) {
    const unsigned v = unsigned(p[i]) << 16 | unsigned(p[i + 1]) << 8 |
                       unsigned(p[i + 2]);
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out.push_back(alphabet[(v >> 6) & 63]);
    out.push_back(alphabet[v & 63]);
  }
  if (i + 1 == len) {
    const unsigned v = unsigned(p[i]) << 16;
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out.append("==");
  } else if (i + 2 == len) {
    const unsigned v = unsigned(p[i]) << 16 | unsigned(p[i + 1]) << 8;
    out.push_back(alphabet[(v >> 18) & 63]);
    out.push_back(alphabet[(v >> 12) & 63]);
    out.push_back(alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

namespace {

nlohmann::json timings_json(const StageTimings& t, bool zero) {
  auto z = [zero](double v) { return zero ? 0.0 : v; };
  return nlohmann::json{{"resize", z(t.resize)},   {"forward", z(t.forward)},
                        {"harris", z(t.harris)},   {"distance", z(t.distance)},
                        {"match", z(t.match)},     {"ransac", z(t.ransac)},
                        {"total", z(t.total)}};
}

nlohmann::json level_json(const DescriptorLevel& level, bool with_data) {
  nlohmann::json j{{"grid_h", level.grid_h},
                   {"grid_w", level.grid_w},
                   {"dim", level.dim}};
  if (with_data)
    j["data_b64"] =
        base64_encode(level.data.data(), level.data.size() * sizeof(float));
  return j;
}

nlohmann::json side_json(const Registrar::Prepared& p, bool with_desc) {
  nlohmann::json corners = nlohmann::json::array();
  for (const Corner& c : p.gate.corners)
    corners.push_back({c.x, c.y});
  nlohmann::json gated = nlohmann::json::array();
  for (int i = 0; i < p.gate.cells(); ++i)
    if (p.gate.gated(i)) gated.push_back(i);
  return nlohmann::json{{"original_size", {p.orig_w, p.orig_h}},
                        {"grid", {p.gate.grid_h, p.gate.grid_w}},
                        {"corners", corners},
                        {"gated_cells", gated},
                        {"f1", level_json(p.pyramid.f1, with_desc)},
                        {"f2", level_json(p.pyramid.f2, with_desc)},
                        {"f3", level_json(p.pyramid.f3, with_desc)}};
}

} // namespace

nlohmann::json registration_report_json(const RegistrationResult& result,
                                        bool zero_times) {
  nlohmann::json j;
  if (result.ok) {
    j["homography"] = std::vector<double>(result.homography.h,
                                          result.homography.h + 9);
    nlohmann::json corners = nlohmann::json::array();
    for (const Vec2& c : result.roi_corners) corners.push_back({c.x, c.y});
    j["roi"] = {{"corners", corners},
                {"center", {result.roi_center.x, result.roi_center.y}}};
  } else {
    j["failure"] = {{"stage", result.failure_stage},
                    {"detail", result.failure_detail}};
  }
  j["matches"] = result.match_count;
  j["timings_ms"] = timings_json(result.timings_ms, zero_times);
  return j;
}

nlohmann::json match_debug_json(const Registrar::Prepared& ix,
                                const Registrar::Prepared& iy,
                                const MatchSet& mutual,
                                bool include_descriptors) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const MatchPair& p : mutual.pairs) {
    const Vec2 sc = iy.pyramid.cell_center(p.src);
    const Vec2 dc = ix.pyramid.cell_center(p.dst);
    pairs.push_back({{"src_cell", p.src},
                     {"dst_cell", p.dst},
                     {"src_px", {sc.x, sc.y}},
                     {"dst_px", {dc.x, dc.y}},
                     {"distance", p.distance},
                     {"theta", p.theta}});
  }
  return nlohmann::json{{"reference", side_json(ix, include_descriptors)},
                        {"dynamic", side_json(iy, include_descriptors)},
                        {"theta_cut", mutual.theta_cut_used},
                        {"matches", pairs}};
}

nlohmann::json eval_report_json(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const EvalRow& r : report.rows) {
    rows.push_back({{"pair", r.pair_id},
                    {"scale", r.scale},
                    {"wb", r.wb},
                    {"TPR", r.tpr},
                    {"TP", r.tp},
                    {"FP", r.fp},
                    {"time_ms", r.time_ms},
                    {"failed", r.failed},
                    {"note", r.note}});
  }
  nlohmann::json agg = nlohmann::json::array();
  for (const ScaleAggregate& a : report.by_scale)
    agg.push_back({{"scale", a.scale},
                   {"rows", a.rows},
                   {"mean_TPR", a.mean_tpr},
                   {"mean_time_ms", a.mean_time_ms}});
  return nlohmann::json{
      {"tol_px", report.tol_px}, {"rows", rows}, {"by_scale", agg}};
}

nlohmann::json scenario_summary_json(const ScenarioReport& report) {
  return nlohmann::json{{"steps", int(report.steps.size())},
                        {"mean_error_px", report.mean_error_px},
                        {"max_error_px", report.max_error_px},
                        {"fraction_in_fov", report.fraction_in_fov},
                        {"lost_frames", report.lost_frames},
                        {"convergence_step", report.convergence_step}};
}

nlohmann::json weight_info_json(const WeightBundle& bundle) {
  nlohmann::json layers = nlohmann::json::array();
  for (size_t i = 0; i < bundle.layers.size(); ++i) {
    const ConvWeights& w = bundle.layers[i];
    layers.push_back({{"layer", int(i)},
                      {"out_ch", w.out_ch},
                      {"in_ch", w.in_ch},
                      {"kernel", {w.out_ch, w.in_ch, 3, 3}},
                      {"parameters", int(w.kernel.size() + w.bias.size())}});
  }
  return nlohmann::json{{"layers", layers}, {"normalized", bundle.has_norm}};
}

} // namespace msreg
