#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wbench/config.hpp"
#include "wbench/geom.hpp"
#include "wbench/manifest.hpp"
#include "wbench/sidecar.hpp"

namespace wbench::nav {

/// Unit direction of a translation key set in the camera frame
/// (W +z, S -z, A -x, D +x).
geom::Vec3 translation_direction(const ActionSpec& action);

/// Signed heading rotation for one unit of the action's rotation key:
/// axis +y for yaw (right positive), +x for pitch (up positive).
geom::Vec3 rotation_axis(const ActionSpec& action);

/// Adaptive parameters recovered from a predicted turn.
struct GtParams {
  double length = 0;     // translation GT length
  double theta = 0;      // rotation GT angle, radians
  double radius = 0;     // orbit radius
  bool fallback_length = false;
  bool fallback_rotation = false;
};

/// Straight line of `samples` poses from `start` along the key direction.
geom::Track build_gt_translation(const ActionSpec& action, const geom::Pose& start, double L_pred,
                                 const NavConfig& cfg, int samples = 0,
                                 GtParams* params = nullptr);

/// Orbit (third person) or heading arc (first person) recovered from the
/// predicted turn via R = chord / (2 sin(theta/2)).
geom::Track build_gt_rotation(const ActionSpec& action, const geom::Pose& start,
                              const geom::Track& pred_turn, Perspective perspective,
                              const NavConfig& cfg, GtParams* params = nullptr);

/// Translation plus rotation keys: per step a heading increment, then a
/// translation step along the updated heading.
geom::Track build_gt_compound(const ActionSpec& action, const geom::Pose& start,
                              const geom::Track& pred_turn, Perspective perspective,
                              const NavConfig& cfg, GtParams* params = nullptr);

/// Dispatches on the action shape; the result starts at pred_turn's first pose
/// and has as many samples as pred_turn.
geom::Track build_gt(const ActionSpec& action, const geom::Track& pred_turn,
                     Perspective perspective, const NavConfig& cfg, GtParams* params = nullptr);

/// Orbit radius from chord and angle; 0 when the angle vanishes.
double chord_radius(double chord, double theta);

struct NateResult {
  double t = 0;
  double r = 0;
  double ate_t = 0;
  double ate_r = 0;
};

/// Normalized absolute trajectory error between equally long resampled,
/// aligned tracks.
NateResult nate(const geom::Track& gt, const geom::Track& pred, double L_pred, double Theta_pred,
                const NavConfig& cfg);

struct RpeResult {
  double t = 0;
  double r = 0;
};
RpeResult rpe(const geom::Track& gt, const geom::Track& pred);

/// Mirror groups that must be applied to `b` to map it onto `a`, or nullopt
/// when the two actions are not a valid same-group pair.
std::optional<std::vector<geom::MirrorPair>> pair_mirrors(const ActionSpec& a,
                                                          const ActionSpec& b);

struct ConsistencyResult {
  double cnate_t = 0;
  double cnate_r = 0;
  int pairs = 0;
};

/// Pairwise nATE over all valid same-group turn pairs.
ConsistencyResult turn_consistency(const std::vector<std::pair<ActionSpec, geom::Track>>& turns,
                                   const NavConfig& cfg);

struct TurnNav {
  int turn = 0;
  std::string action;
  double L_pred = 0;
  double Theta_pred = 0;
  double nate_t = 0;
  double nate_r = 0;
  double rpe_t = 0;
  double rpe_r = 0;
  GtParams gt;
  /// 100 (1 - (nate_t + nate_r) / 2)
  double score = 0;
};

struct NavBreakdown {
  std::vector<TurnNav> turns;
  // Over the concatenated per-turn resampled tracks, normalized by the whole
  // video's path length and summed turn rotation.
  double nate_t = 0;
  double nate_r = 0;
  double cnate_t = 0;
  double cnate_r = 0;
  int pairs = 0;
  double acc = 0;
  double cons = 0;
  double rpe_t = 0;
  double rpe_r = 0;
  double nav_score = 0;
};

/// Scores every navigation turn of the case. Throws MissingPoseError when a
/// navigation turn has no poses and std::invalid_argument when the case has no
/// navigation turn.
NavBreakdown nav_score(const CaseManifest& c, const PoseTrack& poses, const NavConfig& cfg);

}  // namespace wbench::nav
