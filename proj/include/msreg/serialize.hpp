#pragma once

#include <string>

#include <json.hpp>

#include "msreg/eval.hpp"
#include "msreg/features.hpp"
#include "msreg/matching.hpp"
#include "msreg/pipeline.hpp"
#include "msreg/tracksim.hpp"

namespace msreg {

// Registration report:
//   {homography: [9], roi: {corners: [[x,y]x4], center: [x,y]},
//    matches: int, timings_ms: {resize, forward, harris, distance, match,
//    ransac, total}}
// Failures replace homography/roi with a failure object. zero_times makes
// the report byte-reproducible.
nlohmann::json registration_report_json(const RegistrationResult& result,
                                        bool zero_times);

// Debug dump of the matching internals: grid geometry, corners, and one
// record per mutual pair; include_descriptors adds base64 little-endian
// f32 descriptor matrices for cross-implementation comparison.
nlohmann::json match_debug_json(const Registrar::Prepared& ix,
                                const Registrar::Prepared& iy,
                                const MatchSet& mutual,
                                bool include_descriptors);

nlohmann::json eval_report_json(const EvalReport& report);

nlohmann::json scenario_summary_json(const ScenarioReport& report);

nlohmann::json weight_info_json(const WeightBundle& bundle);

std::string base64_encode(const void* data, size_t len);

} // namespace msreg
