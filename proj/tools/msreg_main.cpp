// msreg: blind multiscale registration CLI.
//
// Subcommands: register, match-debug, eval, simulate, weights init/info,
// synth, texture. Exit codes: 0 success, 1 usage/config/IO error,
// 2 registration failure (register only). All reports are byte-stable
// across reruns with the same seeds; wall-clock timings are reported as
// zero unless --timings is given.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "msreg/errors.hpp"
#include "msreg/eval.hpp"
#include "msreg/geometry.hpp"
#include "msreg/image.hpp"
#include "msreg/matching.hpp"
#include "msreg/network.hpp"
#include "msreg/pipeline.hpp"
#include "msreg/serialize.hpp"
#include "msreg/texture.hpp"
#include "msreg/tracksim.hpp"

namespace {

using msreg::ImageBuffer;
using nlohmann::json;

// Flags shared by every command that runs the descriptor pipeline.
struct PipelineArgs {
  std::string weights_path;
  uint64_t seed = 0;
  bool has_weights = false;
  bool has_seed = false;

  msreg::PipelineConfig cfg;
  bool has_ransac_seed = false;

  bool quiet = false;
  bool strict = false;
  bool timings = false;
};

void add_pipeline_flags(CLI::App* cmd, PipelineArgs& a, bool with_ransac) {
  auto* w = cmd->add_option("--weights", a.weights_path,
                            "Weight bundle (.msrw) to load");
  auto* s = cmd->add_option("--seed", a.seed,
                            "Derive random weights from this seed");
  w->excludes(s);
  cmd->callback([&a, w, s] {
    a.has_weights = w->count() > 0;
    a.has_seed = s->count() > 0;
  });
  cmd->add_option("--harris-k", a.cfg.harris_k, "Harris response k");
  cmd->add_option("--harris-threshold", a.cfg.harris_threshold_rel,
                  "Harris threshold relative to the max response");
  cmd->add_option("--target-count", a.cfg.target_count,
                  "Minimum candidate matches before the ratio cut stops");
  cmd->add_option("--theta-step", a.cfg.theta_step,
                  "Ratio threshold decrement");
  if (with_ransac) {
    cmd->add_option("--ransac-iters", a.cfg.ransac_iters, "RANSAC iterations");
    cmd->add_option("--ransac-px", a.cfg.ransac_px,
                    "RANSAC inlier threshold, px");
    cmd->add_option("--ransac-seed", a.cfg.ransac_seed, "RANSAC sampler seed");
  }
  cmd->add_flag("--quiet", a.quiet, "Only the report goes to stdout");
  cmd->add_flag("--strict", a.strict,
                "Refuse defaulted seeds on randomized stages");
  cmd->add_flag("--timings", a.timings,
                "Report wall-clock stage timings (breaks byte-stability)");
}

// Validates the exactly-one-of weights/seed contract and builds the
// registrar. `needs_ransac_seed` adds the strict-mode explicit-seed check.
msreg::Registrar make_registrar(const CLI::App* cmd, const PipelineArgs& a,
                                bool needs_ransac_seed) {
  if (a.has_weights == a.has_seed)
    throw msreg::argument_error(
        "exactly one of --weights and --seed is required");
  if (a.strict && a.timings)
    throw msreg::argument_error("--timings breaks reproducibility; it cannot "
                                "be combined with --strict");
  if (a.strict && needs_ransac_seed && cmd->count("--ransac-seed") == 0)
    throw msreg::argument_error("--strict requires an explicit --ransac-seed");
  const msreg::NetworkSpec spec = msreg::NetworkSpec::standard();
  msreg::WeightBundle weights =
      a.has_weights ? msreg::load_weights(a.weights_path, spec)
                    : msreg::init_weights_seeded(spec, a.seed);
  return msreg::Registrar(std::move(weights), a.cfg);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw msreg::io_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw msreg::io_error("short write: " + path);
}

void emit_report(const std::string& text, const std::string& out_path) {
  if (!out_path.empty()) write_text(out_path, text);
  std::cout << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

int cmd_register(const PipelineArgs& a, const CLI::App* cmd,
                 const std::string& dyn_path, const std::string& ref_path,
                 const std::string& out_path, const std::string& warp_path) {
  msreg::Registrar reg = make_registrar(cmd, a, true);
  ImageBuffer ref = msreg::load_image(ref_path);
  ImageBuffer dyn = msreg::load_image(dyn_path);
  if (!a.quiet)
    std::cerr << "registering " << dyn_path << " against " << ref_path << "\n";
  msreg::RegistrationResult res = reg.register_pair(ref, dyn);
  emit_report(dump(msreg::registration_report_json(res, !a.timings)),
              out_path);
  if (!res.ok) {
    if (!a.quiet)
      std::cerr << "registration failed at stage " << res.failure_stage << ": "
                << res.failure_detail << "\n";
    return 2;
  }
  if (!warp_path.empty()) {
    // Overlay: dynamic frame warped onto the reference 448 frame.
    msreg::Registrar::Prepared pd = reg.prepare(dyn);
    ImageBuffer warped =
        msreg::warp_image(pd.frame, res.homography, 448, 448);
    msreg::save_image(warped, warp_path);
  }
  return 0;
}

int cmd_match_debug(const PipelineArgs& a, const CLI::App* cmd,
                    const std::string& dyn_path, const std::string& ref_path,
                    const std::string& out_path, bool descriptors) {
  msreg::Registrar reg = make_registrar(cmd, a, false);
  msreg::Registrar::Prepared ix = reg.prepare(msreg::load_image(ref_path));
  msreg::Registrar::Prepared iy = reg.prepare(msreg::load_image(dyn_path));
  msreg::FusedDistanceMatrix fwd =
      msreg::fused_distance(iy.pyramid, ix.pyramid, iy.gate, ix.gate,
                            reg.config().distance_weights);
  msreg::MatchSet mutual =
      msreg::match_bidirectional(fwd, fwd.transposed(),
                                 reg.config().target_count,
                                 reg.config().theta_step);
  emit_report(dump(msreg::match_debug_json(ix, iy, mutual, descriptors)),
              out_path);
  return 0;
}

int cmd_eval(const PipelineArgs& a, const CLI::App* cmd,
             const std::string& manifest_path, const std::string& out_path,
             const std::string& json_path) {
  msreg::Registrar reg = make_registrar(cmd, a, true);
  msreg::EvalManifest manifest = msreg::load_manifest(manifest_path);
  if (!a.quiet)
    std::cerr << "eval: " << manifest.images.size() << " image(s), "
              << manifest.scales.size() << " scale(s)\n";
  msreg::EvalReport report = msreg::run_benchmark(manifest, reg, !a.timings);
  if (!json_path.empty())
    write_text(json_path, dump(msreg::eval_report_json(report)));
  emit_report(msreg::eval_report_csv(report), out_path);
  return 0;
}

int cmd_simulate(const PipelineArgs& a, const CLI::App* cmd,
                 const std::string& scenario_path, const std::string& out_path,
                 const std::string& summary_path) {
  msreg::ScenarioConfig scenario = msreg::load_scenario(scenario_path);
  std::optional<msreg::Registrar> reg;
  if (!scenario.use_oracle) reg = make_registrar(cmd, a, true);
  else if (a.has_weights || a.has_seed)
    throw msreg::argument_error(
        "scenario uses the oracle registrar; --weights/--seed do not apply");
  ImageBuffer scene = msreg::load_image(scenario.scene_path);
  msreg::TrackSimulator sim(std::move(scene), scenario,
                            reg ? &*reg : nullptr);
  if (!a.quiet)
    std::cerr << "simulating " << scenario.steps << " step(s) on "
              << scenario.scene_path << "\n";
  msreg::ScenarioReport report = sim.run();
  if (!out_path.empty()) write_text(out_path, msreg::trajectory_csv(report));
  std::string summary = dump(msreg::scenario_summary_json(report));
  if (!summary_path.empty()) write_text(summary_path, summary);
  std::cout << summary;
  return 0;
}

int cmd_weights_init(const std::string& out_path, uint64_t seed,
                     const std::vector<double>& norm) {
  const msreg::NetworkSpec spec = msreg::NetworkSpec::standard();
  msreg::WeightBundle bundle = msreg::init_weights_seeded(spec, seed);
  if (!norm.empty()) {
    bundle.has_norm = true;
    for (int c = 0; c < 3; ++c) {
      bundle.norm_mean[c] = float(norm[size_t(c)]);
      bundle.norm_scale[c] = float(norm[size_t(c) + 3]);
    }
  }
  msreg::save_weights(bundle, out_path);
  return 0;
}

int cmd_weights_info(const std::string& path, const std::string& out_path) {
  const msreg::NetworkSpec spec = msreg::NetworkSpec::standard();
  msreg::WeightBundle bundle = msreg::load_weights(path, spec);
  emit_report(dump(msreg::weight_info_json(bundle)), out_path);
  return 0;
}

int cmd_synth(const std::string& source_path, int scale,
              const std::string& wb, uint64_t seed,
              const std::string& wide_path, const std::string& narrow_path,
              const std::string& gt_path) {
  ImageBuffer source = msreg::load_image(source_path);
  msreg::SynthesizedPair pair =
      msreg::synthesize_pair(source, scale, wb, seed);
  msreg::save_image(pair.wide, wide_path);
  msreg::save_image(pair.narrow, narrow_path);
  if (!gt_path.empty()) {
    json gt{{"scale_ratio", scale},
            {"wb", wb},
            {"wide_to_narrow", pair.wide_to_narrow.h},
            {"narrow_to_wide", pair.narrow_to_wide.h}};
    write_text(gt_path, dump(gt));
  }
  return 0;
}

int cmd_texture(const std::string& out_path, msreg::TextureParams params,
                uint64_t seed, const std::string& centers_path) {
  if (centers_path.empty()) {
    msreg::save_image(msreg::generate_texture(params, seed), out_path);
    return 0;
  }
  std::vector<std::pair<double, double>> apexes;
  msreg::save_image(msreg::generate_texture(params, seed, &apexes), out_path);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [x, y] : apexes) arr.push_back({x, y});
  write_text(centers_path, dump(nlohmann::json{{"apexes", arr}}));
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind multiscale image registration"};
  app.require_subcommand(1);

  // register
  PipelineArgs ra;
  std::string r_ref, r_dyn, r_out, r_warp;
  CLI::App* c_register = app.add_subcommand(
      "register", "Register a dynamic image against a reference image");
  c_register
      ->add_option("dynamic", r_dyn,
                   "Image to register (its frame is mapped by the result)")
      ->required();
  c_register->add_option("reference", r_ref, "Image registered against")
      ->required();
  add_pipeline_flags(c_register, ra, true);
  c_register->add_option("--out", r_out, "Write the JSON report here");
  c_register->add_option("--warp", r_warp,
                         "Write the dynamic frame warped onto the reference "
                         "448 frame");

  // match-debug
  PipelineArgs ma;
  std::string m_ref, m_dyn, m_out;
  bool m_desc = false;
  CLI::App* c_match = app.add_subcommand(
      "match-debug", "Dump matching internals for a pair as JSON");
  c_match->add_option("dynamic", m_dyn, "Image to register")->required();
  c_match->add_option("reference", m_ref, "Image registered against")
      ->required();
  add_pipeline_flags(c_match, ma, false);
  c_match->add_option("--out", m_out, "Write the JSON dump here");
  c_match->add_flag("--descriptors", m_desc,
                    "Include base64 descriptor matrices");

  // eval
  PipelineArgs ea;
  std::string e_manifest, e_out, e_json;
  CLI::App* c_eval = app.add_subcommand(
      "eval", "Run the synthesized-pair benchmark from a manifest");
  c_eval->add_option("manifest", e_manifest, "Benchmark manifest JSON")
      ->required();
  add_pipeline_flags(c_eval, ea, true);
  c_eval->add_option("--out", e_out, "Write the CSV report here");
  c_eval->add_option("--json", e_json, "Write the JSON report here");

  // simulate
  PipelineArgs sa;
  std::string s_scenario, s_out, s_summary;
  CLI::App* c_sim = app.add_subcommand(
      "simulate", "Run the closed-loop tracking simulation");
  c_sim->add_option("scenario", s_scenario, "Scenario config JSON")
      ->required();
  add_pipeline_flags(c_sim, sa, true);
  c_sim->add_option("--out", s_out, "Write the trajectory CSV here");
  c_sim->add_option("--summary", s_summary, "Write the summary JSON here");

  // weights init|info
  CLI::App* c_weights =
      app.add_subcommand("weights", "Create or inspect weight bundles");
  c_weights->require_subcommand(1);
  std::string wi_out;
  uint64_t wi_seed = 0;
  std::vector<double> wi_norm;
  CLI::App* c_winit = c_weights->add_subcommand(
      "init", "Write a seeded random weight bundle");
  c_winit->add_option("output", wi_out, "Output .msrw path")->required();
  c_winit->add_option("--seed", wi_seed, "Weight seed")->required();
  c_winit->add_option("--norm", wi_norm,
                      "Input normalization: 3 means then 3 scales")
      ->expected(6);
  std::string wf_path, wf_out;
  CLI::App* c_winfo =
      c_weights->add_subcommand("info", "Describe a weight bundle as JSON");
  c_winfo->add_option("input", wf_path, "Weight bundle path")->required();
  c_winfo->add_option("--out", wf_out, "Write the JSON here");

  // synth
  std::string sy_source, sy_wide, sy_narrow, sy_gt, sy_wb = "none";
  int sy_scale = 16;
  uint64_t sy_seed = 1;
  CLI::App* c_synth = app.add_subcommand(
      "synth", "Synthesize a wide/narrow benchmark pair with ground truth");
  c_synth->add_option("source", sy_source, "High-resolution source image")
      ->required();
  c_synth->add_option("--scale", sy_scale, "Pixel-count ratio: 16, 64 or 256")
      ->required();
  c_synth->add_option("--wb", sy_wb,
                      "White balance: none, gain, or separate:K");
  c_synth->add_option("--seed", sy_seed, "Gain-draw seed");
  c_synth->add_option("--out-wide", sy_wide, "Wide-frame output path")
      ->required();
  c_synth->add_option("--out-narrow", sy_narrow, "Narrow-frame output path")
      ->required();
  c_synth->add_option("--gt", sy_gt, "Ground-truth homography JSON path");

  // texture
  std::string t_out;
  msreg::TextureParams t_params;
  t_params.width = 1792;
  t_params.height = 1792;
  uint64_t t_seed = 1;
  CLI::App* c_texture = app.add_subcommand(
      "texture", "Generate a seeded synthetic texture image");
  c_texture->add_option("output", t_out, "Output image path")->required();
  c_texture->add_option("--width", t_params.width, "Width, px");
  c_texture->add_option("--height", t_params.height, "Height, px");
  c_texture->add_option("--seed", t_seed, "Texture seed");
  c_texture->add_option("--fan-pitch-frac", t_params.fan_pitch_frac,
                        "Anchor grid pitch / min dim");
  c_texture->add_option("--fan-radius-frac", t_params.fan_radius_frac,
                        "Largest band radius / pitch");
  c_texture->add_option("--level-ratio", t_params.level_ratio,
                        "Band shrink factor per level");
  c_texture->add_option("--min-band-px", t_params.min_band_px,
                        "Smallest band width, px");
  c_texture->add_option("--jitter-frac", t_params.jitter_frac,
                        "Anchor jitter / pitch");
  c_texture->add_option("--bg-amp", t_params.bg_amp,
                        "Smooth background color amplitude");
  c_texture->add_option("--soft-px", t_params.soft_px,
                        "Edge softness, px");
  std::string t_centers;
  c_texture->add_option("--centers", t_centers,
                        "Also write the fan apex positions as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e); // prints the message
    return 1;
  }

  try {
    if (c_register->parsed())
      return cmd_register(ra, c_register, r_dyn, r_ref, r_out, r_warp);
    if (c_match->parsed())
      return cmd_match_debug(ma, c_match, m_dyn, m_ref, m_out, m_desc);
    if (c_eval->parsed()) return cmd_eval(ea, c_eval, e_manifest, e_out, e_json);
    if (c_sim->parsed())
      return cmd_simulate(sa, c_sim, s_scenario, s_out, s_summary);
    if (c_winit->parsed()) return cmd_weights_init(wi_out, wi_seed, wi_norm);
    if (c_winfo->parsed()) return cmd_weights_info(wf_path, wf_out);
    if (c_synth->parsed())
      return cmd_synth(sy_source, sy_scale, sy_wb, sy_seed, sy_wide,
                       sy_narrow, sy_gt);
    if (c_texture->parsed())
      return cmd_texture(t_out, t_params, t_seed, t_centers);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
