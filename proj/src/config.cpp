#include "wbench/config.hpp"

#include <fstream>

#include "wbench/digest.hpp"
#include "wbench/errors.hpp"

namespace wbench {

void MetricConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid metric config: ") + what);
  };
  require(nav.K >= 2, "nav.K must be >= 2");
  require(nav.min_disp > 0 && nav.fallback_len > 0 && nav.min_rot_deg > 0 &&
              nav.fallback_theta_deg > 0 && nav.fallback_R > 0 && nav.tpp_min_R > 0 &&
              nav.denom_t_min > 0 && nav.denom_r_min_deg > 0,
          "nav constants must be positive");
  require(consistency.gate_tau > 0 && consistency.gate_tau < 1, "gate_tau must lie in (0,1)");
  require(consistency.n_intermediate > 0 && consistency.min_scene_len > 0 &&
              consistency.centroid_norm > 0 && consistency.min_mask_area_px > 0 &&
              consistency.reproj_stride > 0 && consistency.psnr_cap_db > 0 &&
              consistency.occlusion_rel_depth_tol > 0 && consistency.geo_grid > 0 &&
              consistency.match_radius_px >= 0,
          "consistency constants must be positive");
  require(consistency.cut_threshold > 0 && consistency.cut_threshold < 1,
          "cut_threshold must lie in (0,1)");
  require(quality.hps_p99 > quality.hps_p1, "hps_p99 must exceed hps_p1");
  require(quality.dyn_tau >= 0 && quality.dyn_nmin >= 0, "dynamic degree constants");
  require(judge.max_attempts >= 1, "judge.max_attempts must be >= 1");
  require(judge.interaction_fps > 0 && judge.setting_fps > 0 && judge.default_source_fps > 0,
          "judge fps must be positive");
  require(judge.persp_group_frames >= 1 && judge.max_in_flight >= 1, "judge bounds");
}

MetricConfig config_with_overrides(const nlohmann::json& overrides) {
  nlohmann::json base = MetricConfig{};
  base.merge_patch(overrides);
  MetricConfig cfg;
  try {
    cfg = base.get<MetricConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad metric config override: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

MetricConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_with_overrides(j);
}

std::string config_digest(const MetricConfig& cfg) {
  return sha256_hex(nlohmann::json(cfg).dump());
}

}  // namespace wbench
