#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wbench/manifest.hpp"
#include "wbench/sidecar.hpp"

namespace wbench {

enum class Dimension { video_quality, setting_adherence, interaction_adherence, consistency, physical };

enum class Metric {
  aesthetic_quality,
  imaging_quality,
  temporal_flickering,
  dynamic_degree,
  motion_smoothness,
  hps_norm,
  scene_adherence,
  subject_adherence,
  navigation,
  event_editing,
  subject_action,
  perspective_switching,
  spatial_consistency,
  gated_spatial_consistency,
  segment_continuity,
  perspective_consistency,
  geometric_consistency,
  photometric_consistency,
  subject_consistency,
  background_consistency,
  causal_fidelity,
  visual_plausibility,
};

inline constexpr std::size_t kMetricCount = 22;
const std::array<Metric, kMetricCount>& all_metrics();
inline constexpr std::array<Dimension, 5> kDimensions = {
    Dimension::video_quality, Dimension::setting_adherence, Dimension::interaction_adherence,
    Dimension::consistency, Dimension::physical};

std::string_view metric_name(Metric m);
/// Short column label ("V.1 Aesthetic").
std::string_view metric_label(Metric m);
std::optional<Metric> metric_from_name(std::string_view name);
Dimension metric_dimension(Metric m);
std::string_view dimension_name(Dimension d);
bool metric_uses_judge(Metric m);
/// Sidecar roles the metric reads.
const std::vector<std::string>& metric_inputs(Metric m);
/// Whether the metric is defined for the case at all.
bool metric_applicable(const CaseManifest& c, Metric m);

struct MetricResult {
  std::optional<double> value;
  // Exclusion reason code when value is absent.
  std::string reason;
  nlohmann::json detail;
};

struct TurnScore {
  int turn = 0;
  TurnKind kind = TurnKind::navigation;
  Metric metric = Metric::navigation;
  std::optional<double> score;  // 0..100
  std::string reason;
};

struct ValidityRecord {
  std::vector<std::string> missing_inputs;
  std::map<Metric, std::string> excluded;
  std::vector<SidecarIssue> issues;
  bool transport_failure = false;

  /// True when sidecars exist but break the interchange formats.
  bool hard_failure() const { return !issues.empty(); }
};

struct ScoreCard {
  std::string case_id;
  std::string model_id;
  Perspective perspective = Perspective::first_person;
  SceneCategory scene_category = SceneCategory::nature;
  std::optional<SubjectCategory> subject_category;
  bool in_nav_split = false;
  std::vector<TurnKind> turn_kinds;
  std::map<Metric, MetricResult> metrics;  // applicable metrics only
  std::vector<Metric> not_applicable;
  std::vector<TurnScore> turns;
  ValidityRecord validity;
  std::string config_digest;

  std::optional<double> value(Metric m) const;
};

nlohmann::json to_json(const ScoreCard& card);
ScoreCard scorecard_from_json(const nlohmann::json& j);

/// Deterministic text form (sorted keys, two-space indent, trailing newline).
std::string dump_scorecard(const ScoreCard& card);

}  // namespace wbench
