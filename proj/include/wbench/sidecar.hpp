#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wbench/geom.hpp"
#include "wbench/image.hpp"

namespace wbench {

/// Half-open frame range [begin, end) of one turn.
struct TurnRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool operator==(const TurnRange&) const = default;
};

struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
};

struct PoseTrack {
  std::vector<TurnRange> turns;
  geom::Track track;

  /// Poses whose frame falls in the range.
  geom::Track slice(const TurnRange& r) const;
};

struct DepthSeries {
  int width = 0;
  int height = 0;
  // Stored as f32 on disk; kept as float so rewrite is byte exact.
  float fx = 0, fy = 0, cx = 0, cy = 0;
  std::vector<int> frames;
  std::vector<std::vector<float>> maps;

  Intrinsics intrinsics() const { return {fx, fy, cx, cy}; }
  const std::vector<float>* find(int frame) const;
};

struct EmbeddingSeries {
  int dim = 0;
  std::vector<int> frames;
  std::vector<std::vector<float>> vectors;

  const std::vector<float>* find(int frame) const;
};

struct ScalarSeries {
  std::vector<int> frames;
  std::vector<double> values;
};

/// The five rating tokens of the plausibility scorer, best first.
inline constexpr const char* kRatingTokens[5] = {"Perfect", "Good", "Fair", "Poor", "Bad"};

/// Expert-model outputs for one generated video. Every optional member is
/// absent when its file is missing.
struct SidecarBundle {
  std::string case_id;
  std::filesystem::path dir;
  int frame_count = 0;
  double fps = 0;
  std::vector<TurnRange> turns;
  std::vector<std::filesystem::path> frame_files;
  std::vector<std::filesystem::path> mask_files;
  std::optional<PoseTrack> poses;
  std::optional<DepthSeries> depth;
  std::map<std::string, EmbeddingSeries> embeddings;
  std::map<std::string, ScalarSeries> scalars;
  std::optional<std::map<std::string, double>> vp_probs;
  /// Roles whose files were not found.
  std::vector<std::string> missing;

  bool has_frames() const { return !frame_files.empty(); }
  bool has_masks() const { return !mask_files.empty(); }
  const EmbeddingSeries* embedding(const std::string& role) const;
  const ScalarSeries* scalar(const std::string& role) const;
  Image frame(int i) const;
  Image mask(int i) const;
};

inline const std::vector<std::string> kEmbeddingRoles = {"subject_local", "subject_global",
                                                         "background"};
inline const std::vector<std::string> kScalarRoles = {
    "aesthetic_raw",  "imaging_raw", "hps_raw",    "flow_top5_mean",
    "smoothness_pair_mae", "cut_prob", "dreamsim_d0"};

struct SidecarIssue {
  std::string role;
  // "format" or "length"
  std::string kind;
  std::string message;
};

struct SidecarInspection {
  SidecarBundle bundle;
  std::vector<SidecarIssue> issues;
};

/// Loads and validates every present sidecar, collecting problems instead of
/// throwing. Roles with issues are dropped from the bundle.
SidecarInspection inspect_sidecars(const std::string& case_id,
                                   const std::filesystem::path& artifacts_root);

/// Strict variant: throws FormatError or InconsistentLengthError on the first
/// issue. Absent files are recorded in bundle.missing.
SidecarBundle load_sidecars(const std::string& case_id,
                            const std::filesystem::path& artifacts_root);

// Readers and writers for the individual interchange formats. Writers emit
// exactly what the readers accept, so read(write(x)) == x and
// write(read(bytes)) == bytes for canonical files.
PoseTrack parse_pose_track(const std::string& text);
std::string serialize_pose_track(const PoseTrack& poses);
DepthSeries parse_depth(const std::string& bytes);
std::string serialize_depth(const DepthSeries& depth);
EmbeddingSeries parse_embeddings(const std::string& bytes);
std::string serialize_embeddings(const EmbeddingSeries& emb);
ScalarSeries parse_scalar_series(const std::string& text);
std::string serialize_scalar_series(const ScalarSeries& s);
std::map<std::string, double> parse_vp_probs(const std::string& text);
std::string serialize_vp_probs(const std::map<std::string, double>& probs);

struct BundleMeta {
  double fps = 24;
  int frames = 0;
  std::vector<TurnRange> turns;
};
BundleMeta parse_meta(const std::string& text);
std::string serialize_meta(const BundleMeta& meta);

std::vector<TurnRange> parse_turn_ranges(const std::string& text);
std::string format_turn_ranges(const std::vector<TurnRange>& turns);

/// Zero-padded six-digit frame stem.
std::string frame_stem(int index);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace wbench
