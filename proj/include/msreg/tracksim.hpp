#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "msreg/image.hpp"
#include "msreg/pipeline.hpp"
#include "msreg/vec2.hpp"

namespace msreg {

struct Trajectory {
  enum class Kind { fixed, linear, sine };
  Kind kind = Kind::fixed;
  Vec2 start;     // scene pixels
  Vec2 velocity;  // px/step (linear)
  Vec2 amplitude; // px (sine)
  double period = 100.0; // steps (sine)

  Vec2 at(int step) const;
};

struct ScenarioConfig {
  std::string scene_path;
  Trajectory trajectory;
  double vibration_sigma = 0.0; // px std per axis per step
  Vec2 miscalibration;          // constant aim-to-actual offset, px
  double gain = 0.7;            // feedback gain K
  double conversion_gain = 0.0; // integral correction of the offset
  int steps = 100;
  uint64_t seed = 1;
  bool use_oracle = false;      // true: ground-truth registrar
};

// Parses the scenario JSON {scene, trajectory{kind,params}, vibration_sigma,
// miscalibration, gain, steps, seed, ...}; complains per field.
ScenarioConfig load_scenario(const std::string& path);

struct StepRecord {
  int step = 0;
  Vec2 aim;        // commanded center, scene px
  Vec2 observed;   // registered position Y, reference-frame px
  double error_px = 0.0; // | actual HR center - target |, scene px
  Vec2 aim_error;  // deterministic part of the error (vibration excluded)
  bool lost = false;
  bool in_fov = false;
};

struct ScenarioReport {
  std::vector<StepRecord> steps;
  double mean_error_px = 0.0;
  double max_error_px = 0.0;
  double fraction_in_fov = 0.0;
  int lost_frames = 0;
  int convergence_step = -1; // first step with error < 1px, -1 if never
};

// Discrete closed-loop simulation: a static wide camera renders the whole
// scene at 448, the gimbal camera cuts a native-resolution 448 window at
// its (miscalibrated, vibrating) aim, registration estimates where that
// window sits in the reference frame, and the aim is corrected by the
// gain-weighted error each step. Failed registrations hold the aim.
class TrackSimulator {
public:
  // `registrar` may be null when cfg.use_oracle is true.
  TrackSimulator(ImageBuffer scene, const ScenarioConfig& cfg,
                 const Registrar* registrar);

  ScenarioReport run();

  static constexpr int kWindow = 448; // HR crop and reference render size

private:
  Vec2 clamp_center(const Vec2& c) const;

  ImageBuffer scene_;
  ScenarioConfig cfg_;
  const Registrar* registrar_;
  ImageBuffer reference_;
  std::optional<Registrar::Prepared> reference_prep_;
  double scene_to_ref_ = 1.0; // reference px per scene px
};

std::string trajectory_csv(const ScenarioReport& report);

} // namespace msreg
