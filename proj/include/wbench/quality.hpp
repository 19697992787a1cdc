#pragma once

#include <optional>
#include <vector>

#include "wbench/config.hpp"
#include "wbench/image.hpp"

namespace wbench::quality {

/// Mean of per-frame aesthetic predictions in [0, 10], times 10.
std::optional<double> aesthetic_score(const std::vector<double>& per_frame);

/// Mean of per-frame imaging quality in [0, 100].
std::optional<double> imaging_score(const std::vector<double>& per_frame);

/// Mean absolute difference over all channels of two equally sized frames.
double frame_mae(const Image& a, const Image& b);

/// (255 - mean MAE) / 255 * 100 over consecutive frame pairs.
std::optional<double> flicker_score(const std::vector<Image>& frames);
/// Same mapping from precomputed consecutive-pair MAEs.
std::optional<double> flicker_from_mae(const std::vector<double>& pair_mae);

/// Minimum exceedance count for `pairs` flow pairs under the config.
int dynamic_nmin(int pairs, const QualityConfig& cfg);

/// 100 when at least N_min pairs exceed tau, else 0.
std::optional<double> dynamic_degree(const std::vector<double>& m, const QualityConfig& cfg);

std::optional<double> motion_smoothness(const std::vector<double>& pair_mae);

/// clip((r - p1) / (p99 - p1) * 100, 0, 100)
double hps_norm(double raw_mean, const QualityConfig& cfg);

}  // namespace wbench::quality
