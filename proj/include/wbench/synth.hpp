#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "wbench/manifest.hpp"
#include "wbench/sidecar.hpp"

namespace wbench::synth {

enum class Mode { perfect, reversed_rotation, static_pose };
Mode mode_from_string(const std::string& s);
std::string_view to_string(Mode m);

struct SynthOptions {
  Mode mode = Mode::perfect;
  // Gaussian pose noise: translation in scene units, rotation in radians.
  double sigma_t = 0;
  double sigma_r = 0;
  std::uint64_t seed = 0;
  int frames_per_turn = 25;
  double fps = 24;
  double step_length = 1.0;      // path length of a translation turn
  double turn_angle_deg = 45.0;  // rotation per rotation turn
  double orbit_radius = 2.0;     // third-person pivot distance
  // Also render frames, depth, masks, embeddings and scalar series.
  bool full = false;
  int width = 64;
  int height = 48;
};

/// Camera-to-world poses realizing the case's action sequence.
PoseTrack synth_poses(const CaseManifest& c, const SynthOptions& opt);

/// Writes <root>/<case_id>/ with meta.txt and poses.txt, plus every other
/// sidecar when opt.full.
void write_bundle(const CaseManifest& c, const SynthOptions& opt, const std::filesystem::path& root);

}  // namespace wbench::synth
