#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace wbench {

/// Constants of the trajectory metric.
struct NavConfig {
  int K = 20;
  double min_disp = 0.1;
  double fallback_len = 1.0;
  double min_rot_deg = 3.0;
  double fallback_theta_deg = 30.0;
  double fallback_R = 1.0;
  double tpp_min_R = 1.0;
  double denom_t_min = 0.5;
  double denom_r_min_deg = 10.0;
};

struct ConsistencyConfig {
  double gate_tau = 0.15;
  int n_intermediate = 10;
  double cut_threshold = 0.5;
  int min_scene_len = 10;
  double centroid_norm = 0.3;
  int min_mask_area_px = 10;
  int reproj_stride = 5;
  double psnr_cap_db = 100.0;
  double occlusion_rel_depth_tol = 0.05;
  // Grid points per image axis for geometric reprojection.
  int geo_grid = 32;
  // Half-width of the pixel window searched for the nearest 3D neighbour.
  int match_radius_px = 4;
};

struct QualityConfig {
  double hps_p1 = 5.21;
  double hps_p99 = 8.66;
  double dyn_tau = 2.0;
  // 0 selects ceil(pairs / 2).
  int dyn_nmin = 0;
};

struct JudgeConfig {
  std::uint64_t stub_seed = 7;
  int max_attempts = 3;
  std::vector<int> backoff_ms = {500, 1000, 2000};
  double interaction_fps = 3.0;
  double setting_fps = 2.0;
  double default_source_fps = 24.0;
  int persp_group_frames = 4;
  std::string model = "doubao-seed-2.0-lite";
  int max_in_flight = 4;
};

/// Every tunable constant of the metric suite. Serialized verbatim into run
/// manifests and report metadata.
struct MetricConfig {
  std::string version = "wbench-metrics/1";
  NavConfig nav;
  ConsistencyConfig consistency;
  QualityConfig quality;
  JudgeConfig judge;

  /// Throws ConfigError when an invariant fails.
  void validate() const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NavConfig, K, min_disp, fallback_len, min_rot_deg,
                                                fallback_theta_deg, fallback_R, tpp_min_R,
                                                denom_t_min, denom_r_min_deg)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ConsistencyConfig, gate_tau, n_intermediate,
                                                cut_threshold, min_scene_len, centroid_norm,
                                                min_mask_area_px, reproj_stride, psnr_cap_db,
                                                occlusion_rel_depth_tol, geo_grid,
                                                match_radius_px)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(QualityConfig, hps_p1, hps_p99, dyn_tau, dyn_nmin)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(JudgeConfig, stub_seed, max_attempts, backoff_ms,
                                                interaction_fps, setting_fps, default_source_fps,
                                                persp_group_frames, model, max_in_flight)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MetricConfig, version, nav, consistency, quality,
                                                judge)

/// Applies a JSON merge patch of overrides on top of the defaults.
MetricConfig config_with_overrides(const nlohmann::json& overrides);
MetricConfig load_config_file(const std::string& path);

/// Hex SHA-256 of the canonical JSON form.
std::string config_digest(const MetricConfig& cfg);

}  // namespace wbench
