#include "msreg/tracksim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "msreg/errors.hpp"
#include "msreg/rng.hpp"

namespace msreg {

Vec2 Trajectory::at(int step) const {
  switch (kind) {
    case Kind::fixed:
      return start;
    case Kind::linear:
      return start + velocity * double(step);
    case Kind::sine: {
      const double phase = 2.0 * 3.14159265358979323846 * step / period;
      return {start.x + amplitude.x * std::sin(phase),
              start.y + amplitude.y * std::sin(2.0 * phase)};
    }
  }
  return start;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open scenario " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw format_error("scenario " + path + " is not valid JSON: " + e.what());
  }

  ScenarioConfig cfg;
  auto bad = [&](const std::string& what) {
    return config_error("scenario " + path + ": " + what);
  };
  try {
    cfg.scene_path = j.at("scene").get<std::string>();

    const auto& tr = j.at("trajectory");
    const std::string kind = tr.at("kind").get<std::string>();
    const auto& pr = tr.value("params", nlohmann::json::object());
    auto vec = [&](const char* key, Vec2 fallback) {
      if (!pr.contains(key)) return fallback;
      const auto& v = pr.at(key);
      return Vec2(v.at(0).get<double>(), v.at(1).get<double>());
    };
    if (kind == "static") {
      cfg.trajectory.kind = Trajectory::Kind::fixed;
    } else if (kind == "linear") {
      cfg.trajectory.kind = Trajectory::Kind::linear;
      cfg.trajectory.velocity = vec("velocity", {1.0, 0.0});
    } else if (kind == "sine") {
      cfg.trajectory.kind = Trajectory::Kind::sine;
      cfg.trajectory.amplitude = vec("amplitude", {50.0, 50.0});
      cfg.trajectory.period = pr.value("period", 100.0);
    } else {
      throw bad("trajectory.kind must be static, linear or sine, got '" +
                kind + "'");
    }
    cfg.trajectory.start = vec("start", {-1.0, -1.0});

    cfg.vibration_sigma = j.value("vibration_sigma", 0.0);
    if (j.contains("miscalibration")) {
      const auto& m = j.at("miscalibration");
      cfg.miscalibration = Vec2(m.at(0).get<double>(), m.at(1).get<double>());
    }
    cfg.gain = j.value("gain", 0.7);
    cfg.conversion_gain = j.value("conversion_gain", 0.0);
    cfg.steps = j.value("steps", 100);
    cfg.seed = j.value("seed", uint64_t(1));
    const std::string reg = j.value("registrar", std::string("pipeline"));
    if (reg == "oracle")
      cfg.use_oracle = true;
    else if (reg != "pipeline")
      throw bad("registrar must be 'oracle' or 'pipeline', got '" + reg + "'");
  } catch (const nlohmann::json::exception& e) {
    throw bad(std::string("missing or mistyped field: ") + e.what());
  }

  if (!(cfg.gain > 0.0) || cfg.gain > 1.0)
    throw bad("gain must be in (0, 1]");
  if (cfg.steps < 1) throw bad("steps must be >= 1");
  if (cfg.vibration_sigma < 0.0) throw bad("vibration_sigma must be >= 0");
  if (cfg.trajectory.period <= 0.0)
    throw bad("trajectory period must be positive");
  return cfg;
}

TrackSimulator::TrackSimulator(ImageBuffer scene, const ScenarioConfig& cfg,
                               const Registrar* registrar)
    : scene_(std::move(scene)), cfg_(cfg), registrar_(registrar) {
  if (scene_.width < 2 * kWindow || scene_.height < 2 * kWindow)
    throw config_error("tracksim: scene must be at least " +
                       std::to_string(2 * kWindow) + "px per side, got " +
                       std::to_string(scene_.width) + "x" +
                       std::to_string(scene_.height));
  if (scene_.width != scene_.height)
    throw config_error("tracksim: scene must be square so the reference "
                       "render keeps one scale factor");
  if (!cfg_.use_oracle && registrar_ == nullptr)
    throw config_error("tracksim: pipeline registrar requested but none "
                       "provided");
  scene_ = expand_to_rgb(scene_);

  // Default the trajectory start to the scene center.
  if (cfg_.trajectory.start.x < 0.0 && cfg_.trajectory.start.y < 0.0)
    cfg_.trajectory.start =
        Vec2(scene_.width / 2.0, scene_.height / 2.0);

  // Trajectory must keep at least half the HR window inside the scene.
  for (int t = 0; t < cfg_.steps; ++t) {
    const Vec2 p = cfg_.trajectory.at(t);
    if (p.x < kWindow / 2.0 || p.y < kWindow / 2.0 ||
        p.x > scene_.width - kWindow / 2.0 ||
        p.y > scene_.height - kWindow / 2.0)
      throw config_error(
          "tracksim: trajectory leaves the usable scene area at step " +
          std::to_string(t));
  }

  reference_ = resize_bilinear(scene_, kWindow, kWindow);
  scene_to_ref_ = double(kWindow) / scene_.width;
  if (registrar_) reference_prep_ = registrar_->prepare(reference_);
}

Vec2 TrackSimulator::clamp_center(const Vec2& c) const {
  const double half = kWindow / 2.0;
  return {std::clamp(c.x, half, scene_.width - half),
          std::clamp(c.y, half, scene_.height - half)};
}

namespace {

// Native-resolution window around `center` with bilinear subpixel
// placement (the gimbal points continuously, not on the pixel grid).
ImageBuffer cut_window(const ImageBuffer& scene, const Vec2& center, int size) {
  ImageBuffer out(size, size, scene.channels);
  const double ox = center.x - size / 2.0;
  const double oy = center.y - size / 2.0;
  for (int y = 0; y < size; ++y) {
    const double sy = std::clamp(oy + y, 0.0, double(scene.height - 1));
    const int y0 = int(sy);
    const int y1 = std::min(y0 + 1, scene.height - 1);
    const float fy = float(sy - y0);
    for (int x = 0; x < size; ++x) {
      const double sx = std::clamp(ox + x, 0.0, double(scene.width - 1));
      const int x0 = int(sx);
      const int x1 = std::min(x0 + 1, scene.width - 1);
      const float fx = float(sx - x0);
      for (int c = 0; c < scene.channels; ++c) {
        const float top = scene.at(x0, y0, c) +
                          (scene.at(x1, y0, c) - scene.at(x0, y0, c)) * fx;
        const float bot = scene.at(x0, y1, c) +
                          (scene.at(x1, y1, c) - scene.at(x0, y1, c)) * fx;
        out.at(x, y, c) = top + (bot - top) * fy;
      }
    }
  }
  return out;
}

} // namespace

ScenarioReport TrackSimulator::run() {
  Xoshiro256 rng(cfg_.seed ^ 0x9a3c1f47b2d90e15ULL);
  ScenarioReport report;
  report.steps.reserve(size_t(cfg_.steps));

  const double K = cfg_.gain;
  Vec2 aim = cfg_.trajectory.at(0); // start aimed at the target's first mark
  Vec2 correction;                  // learned offset compensation

  const double half = kWindow / 2.0;
  double error_sum = 0.0;

  for (int t = 0; t < cfg_.steps; ++t) {
    const Vec2 target = cfg_.trajectory.at(t);
    const Vec2 vib = cfg_.vibration_sigma > 0.0
                         ? Vec2(cfg_.vibration_sigma * rng.normal(),
                                cfg_.vibration_sigma * rng.normal())
                         : Vec2(0.0, 0.0);
    // Where the HR camera actually ends up pointing.
    const Vec2 actual =
        clamp_center(aim + cfg_.miscalibration + correction + vib);

    StepRecord rec;
    rec.step = t;
    rec.aim = aim;
    rec.error_px = distance(actual, target);
    rec.aim_error = (aim + cfg_.miscalibration + correction) - target;
    rec.in_fov = std::abs(actual.x - target.x) <= half &&
                 std::abs(actual.y - target.y) <= half;

    // Observe: where does the HR frame sit in the reference frame?
    bool have_y = false;
    Vec2 y;
    if (cfg_.use_oracle) {
      y = actual * scene_to_ref_;
      have_y = true;
    } else {
      const ImageBuffer hr = cut_window(scene_, actual, kWindow);
      const RegistrationResult res =
          registrar_->register_prepared(*reference_prep_,
                                        registrar_->prepare(hr));
      if (res.ok) {
        // Accept only results a calibrated system would believe: enough
        // consensus, plausible zoom factor, center inside the frame.
        const double a = res.homography.h[0] * res.homography.h[4] -
                         res.homography.h[1] * res.homography.h[3];
        const double scale = std::sqrt(std::abs(a));
        const double expected = scene_to_ref_;
        const bool sane = int(res.accepted.size()) >= 8 &&
                          scale > 0.5 * expected && scale < 2.0 * expected &&
                          res.roi_center.x >= 0.0 &&
                          res.roi_center.x < double(kWindow) &&
                          res.roi_center.y >= 0.0 &&
                          res.roi_center.y < double(kWindow);
        if (sane) {
          y = res.roi_center;
          have_y = true;
        }
      }
    }

    if (have_y) {
      rec.observed = y;
      const Vec2 err_ref = target * scene_to_ref_ - y;
      const Vec2 err_scene = err_ref * (1.0 / scene_to_ref_);
      aim += err_scene * K;
      if (cfg_.conversion_gain > 0.0) {
        // Slow integral estimate of the constant offset: the measured
        // discrepancy between where we aimed and where we landed.
        const Vec2 landed = y * (1.0 / scene_to_ref_);
        correction -= (landed - rec.aim) * cfg_.conversion_gain;
      }
    } else {
      rec.lost = true;
      report.lost_frames += 1;
    }

    error_sum += rec.error_px;
    report.max_error_px = std::max(report.max_error_px, rec.error_px);
    if (report.convergence_step < 0 && rec.error_px < 1.0)
      report.convergence_step = t;
    report.steps.push_back(rec);
  }

  report.mean_error_px = error_sum / double(cfg_.steps);
  int in_fov = 0;
  for (const StepRecord& r : report.steps) in_fov += r.in_fov ? 1 : 0;
  report.fraction_in_fov = double(in_fov) / double(cfg_.steps);
  return report;
}

std::string trajectory_csv(const ScenarioReport& report) {
  std::ostringstream out;
  out << "step,aim_x,aim_y,Y_x,Y_y,error_px,lost\n";
  out.setf(std::ios::fixed);
  out.precision(4);
  for (const StepRecord& r : report.steps)
    out << r.step << ',' << r.aim.x << ',' << r.aim.y << ',' << r.observed.x
        << ',' << r.observed.y << ',' << r.error_px << ','
        << (r.lost ? 1 : 0) << '\n';
  return out.str();
}

} // namespace msreg
