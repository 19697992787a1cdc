#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "wbench/config.hpp"
#include "wbench/geom.hpp"
#include "wbench/image.hpp"
#include "wbench/sidecar.hpp"

namespace wbench::consistency {

/// Frame in [range.begin, range.end) whose rotation is closest to frame 0's;
/// ties resolve to the earliest frame. Throws MissingPoseError without poses.
int find_return_frame(const geom::Track& track, const TurnRange& final_turn);

/// min(1, (1 - s_min) / tau), floored at 0.
double gate_factor(double s_min, double tau);

/// `n` frame indices spread uniformly over [1, frame_count - 1], endpoints
/// included.
std::vector<int> intermediate_frames(int frame_count, int n);

struct SpatialScores {
  double spatial = 0;
  double gated = 0;
  double s_ret = 0;
  double s_min = 0;
  int return_frame = 0;
};

/// d0[j] is the perceptual distance between frame 0 and frame j.
SpatialScores spatial_scores(const std::vector<double>& d0, int return_idx,
                             const ConsistencyConfig& cfg);

struct SegmentResult {
  double score = 100;
  int cuts = 0;
  std::vector<int> flagged;
};
SegmentResult segment_continuity(const std::vector<double>& cut_probs,
                                 const ConsistencyConfig& cfg);

struct MaskStats {
  long area = 0;
  double cx = 0;  // centroid / width
  double cy = 0;  // centroid / height
};
MaskStats mask_stats(const Image& mask);

/// 100 max(0, 1 - sqrt(var_cx + var_cy) / norm) p over frames with enough
/// mask area, p the fraction of such frames.
double perspective_consistency(const std::vector<MaskStats>& masks, const ConsistencyConfig& cfg);

/// Maps pixel u of camera i with depth d into camera j, given rel = T_j^-1 T_i.
/// nullopt when the point lands behind camera j.
std::optional<Eigen::Vector2d> reproject_point(const Eigen::Vector2d& u, double depth,
                                               const Intrinsics& K, const geom::Pose& rel);

/// Frame pairs (i, i + s), s = min(stride, N - 1), i = 0, s, 2s, ...
std::vector<std::pair<int, int>> reprojection_pairs(int frame_count, int stride);

struct ReprojectionResult {
  double score = 0;
  int pairs = 0;
  long points = 0;
  long behind = 0;
  long occluded = 0;
};

std::optional<ReprojectionResult> geometric_consistency(const DepthSeries& depth,
                                                        const geom::Track& poses, int frame_count,
                                                        const ConsistencyConfig& cfg);

using FrameSource = std::function<Image(int)>;

/// Per-pair PSNR of frame i warped into view j, averaged and clipped to
/// [0, 100]. `psnr` receives the unclipped mean.
std::optional<ReprojectionResult> photometric_consistency(const FrameSource& frames,
                                                          const DepthSeries& depth,
                                                          const geom::Track& poses,
                                                          int frame_count,
                                                          const ConsistencyConfig& cfg,
                                                          double* psnr = nullptr);

/// 10 log10(255^2 / mse), capped.
double psnr_db(double mse, double cap);

double cosine(const std::vector<float>& a, const std::vector<float>& b);

/// Anchored and adjacent cosine agreement over frames present in both series.
/// `area`, when given, maps frame index to mask area; frames below the minimum
/// are skipped. nullopt with fewer than two valid frames.
std::optional<double> subject_consistency(const EmbeddingSeries& local,
                                          const EmbeddingSeries& global,
                                          const std::vector<long>* area,
                                          const ConsistencyConfig& cfg);

std::optional<double> background_consistency(const EmbeddingSeries& emb);

}  // namespace wbench::consistency
