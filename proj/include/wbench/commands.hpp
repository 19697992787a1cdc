#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "wbench/judge.hpp"
#include "wbench/manifest.hpp"
#include "wbench/report.hpp"
#include "wbench/scorecard.hpp"
#include "wbench/synth.hpp"

namespace wbench {

enum ExitCode { kExitOk = 0, kExitValidation = 1, kExitConfig = 2, kExitTransport = 3 };

enum class JudgeMode { stub, endpoint, replay, none };
JudgeMode judge_mode_from_string(const std::string& s);

struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path artifacts;
  std::filesystem::path out;
  Split track = Split::full;
  // Comma-separated selection: metric or dimension names, "judge", "all";
  // a leading '-' removes. Empty keeps everything.
  std::string metrics;
  JudgeMode judge = JudgeMode::stub;
  std::string endpoint_url;
  std::filesystem::path replay_dir;
  std::filesystem::path config_file;
  nlohmann::json overrides = nlohmann::json::object();
  int workers = 1;
  std::string model_id = "model";
  std::set<report::Format> formats = {report::Format::table, report::Format::csv, report::Format::json};
  judge::Sleeper sleep;  // backoff sleeper, default real sleep
};

/// Metric set selected by a RunConfig::metrics expression. Throws ConfigError.
std::set<Metric> select_metrics(const std::string& expr);

/// Evaluates every case of the track and writes run.json, scorecards/,
/// transcripts/ and the report files under cfg.out.
int cmd_run(const RunConfig& cfg, std::ostream& log);

/// Ingest validation only. Writes a per-case summary to `out` and returns
/// kExitValidation when any sidecar breaks its format.
int cmd_validate(const std::filesystem::path& manifest, const std::filesystem::path& artifacts,
                 std::ostream& out, nlohmann::json* summary = nullptr);

/// Rebuilds reports from one or more run directories (one model each).
int cmd_report(const std::vector<std::filesystem::path>& run_dirs, const std::set<report::Format>& formats,
               const std::filesystem::path& out, const std::optional<std::filesystem::path>& votes_csv,
               std::ostream& log);

/// Writes synthetic sidecar bundles for every case of the manifest.
int cmd_synth(const std::filesystem::path& manifest, const std::filesystem::path& artifacts,
              const synth::SynthOptions& opt, std::ostream& log);

/// Loads all scorecards of a run directory, sorted by case id.
std::vector<ScoreCard> load_scorecards(const std::filesystem::path& run_dir);

}  // namespace wbench
