#pragma once

#include <filesystem>
#include <set>
#include <string>

#include "wbench/config.hpp"
#include "wbench/judge.hpp"
#include "wbench/manifest.hpp"
#include "wbench/scorecard.hpp"
#include "wbench/sidecar.hpp"

namespace wbench {

struct EvalOptions {
  const MetricConfig* cfg = nullptr;
  // Empty means every metric.
  std::set<Metric> enabled;
  // Null disables every judge metric.
  judge::JudgeClient* client = nullptr;
  // Transcripts go to <transcript_dir>/<case>.jsonl when set.
  std::filesystem::path transcript_dir;
  judge::Sleeper sleep;
  std::string model_id;
};

/// Scores one case from its inspected sidecars. Metrics whose inputs are
/// absent or invalid are excluded with a reason code; nothing is dropped.
ScoreCard evaluate_case(const CaseManifest& c, const SidecarInspection& sidecars,
                        const EvalOptions& opt);

}  // namespace wbench
