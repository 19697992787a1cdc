#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "wbench/manifest.hpp"
#include "wbench/scorecard.hpp"

namespace wbench::report {

struct MetricAgg {
  std::optional<double> mean;
  int n = 0;         // cases scored
  int excluded = 0;  // applicable cases without a value
};

struct ModelTable {
  std::string model_id;
  Split track = Split::full;
  int cases = 0;
  std::map<Metric, MetricAgg> metrics;
  std::map<Dimension, std::optional<double>> dims;
};

/// Means over evaluable cases of the track; a dimension average is the
/// unweighted mean of its available sub-metric means.
ModelTable aggregate_model(const std::vector<ScoreCard>& cards, Split track,
                           const std::string& model_id = "");

struct Bucket {
  std::optional<double> mean;
  int n = 0;
};
/// Series name -> buckets T1, T2, T3, T4+. Series are the four interaction
/// types plus "semantic", the unweighted mean of the three text-driven types.
using Degradation = std::map<std::string, std::array<Bucket, 4>>;
Degradation turn_degradation(const std::vector<ScoreCard>& cards);

enum class SettingAxis { perspective, scene, subject };
std::string_view to_string(SettingAxis a);

struct ZTable {
  SettingAxis axis = SettingAxis::perspective;
  std::vector<std::string> settings;
  // dimension -> z per setting (nullopt when the setting has no data)
  std::map<Dimension, std::vector<std::optional<double>>> z;
};
/// z_s = (mean_s - mean over setting means) / sample std of setting means.
/// Dimensions with fewer than two populated settings are left out.
ZTable setting_zscores(const std::vector<ScoreCard>& cards, SettingAxis axis);

/// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);
/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(const std::vector<double>& x);
/// Spearman rho with average-rank ties. Throws std::invalid_argument on
/// length mismatch or empty input and DegenerateError for constant input.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct CorrMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::optional<double>>> r;
};
/// Pairwise Pearson over model-level dimension averages, using models where
/// both columns exist. Needs at least three models.
CorrMatrix pearson_matrix(const std::vector<ModelTable>& tables, const std::vector<Dimension>& dims);

struct PairwiseVote {
  std::string aspect;
  std::string model_a;
  std::string model_b;
  // "a", "b" or "tie"
  std::string winner;
};
/// aspect -> model -> win rate, ties counting half for each side.
using HumanPrefSet = std::map<std::string, std::map<std::string, double>>;
HumanPrefSet human_win_rates(const std::vector<PairwiseVote>& votes);
/// CSV with header aspect,model_a,model_b,winner.
std::vector<PairwiseVote> parse_votes_csv(const std::string& text);
/// aspect -> Spearman between human win rates and the engine's column for the
/// aspect (a dimension or metric name) over the models present in both.
std::map<std::string, std::optional<double>> human_alignment(const std::vector<ModelTable>& tables,
                                                             const HumanPrefSet& prefs);

struct Analyses {
  std::map<std::string, Degradation> degradation;  // per model
  std::vector<ZTable> zscores;
  std::optional<CorrMatrix> correlations;
  std::map<std::string, std::optional<double>> human_alignment;
};

struct Report {
  nlohmann::json metadata;
  std::vector<ModelTable> tables;
  Analyses analyses;
};

/// Tables and analyses from per-model card sets.
Report build_report(const std::map<std::string, std::vector<ScoreCard>>& cards_by_model, Split track,
                    const nlohmann::json& metadata, const std::optional<HumanPrefSet>& prefs = std::nullopt);

enum class Format { table, csv, json };
/// "txt"/"table", "csv", "json".
Format format_from_string(const std::string& s);
std::string file_name(Format f);

std::string render_table(const Report& r);
std::string render_csv(const Report& r);
std::string render_json(const Report& r);

/// Writes one file per format into out_dir and returns their paths.
std::vector<std::filesystem::path> emit_report(const Report& r, const std::set<Format>& formats,
                                               const std::filesystem::path& out_dir);

}  // namespace wbench::report
