#include "wbench/quality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "wbench/errors.hpp"

namespace wbench::quality {
namespace {

std::optional<double> mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double mae_to_score(double mae) { return std::clamp((255.0 - mae) / 255.0 * 100.0, 0.0, 100.0); }

}  // namespace

std::optional<double> aesthetic_score(const std::vector<double>& per_frame) {
  auto m = mean(per_frame);
  if (!m) return m;
  return std::clamp(*m * 10.0, 0.0, 100.0);
}

std::optional<double> imaging_score(const std::vector<double>& per_frame) {
  auto m = mean(per_frame);
  if (!m) return m;
  return std::clamp(*m, 0.0, 100.0);
}

double frame_mae(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw FormatError("flicker: frame dimensions differ");
  }
  if (a.data.empty()) return 0.0;
  long long sum = 0;
  for (std::size_t k = 0; k < a.data.size(); ++k) sum += std::abs(int(a.data[k]) - int(b.data[k]));
  return static_cast<double>(sum) / static_cast<double>(a.data.size());
}

std::optional<double> flicker_score(const std::vector<Image>& frames) {
  if (frames.size() < 2) return std::nullopt;
  std::vector<double> mae;
  for (std::size_t i = 1; i < frames.size(); ++i) mae.push_back(frame_mae(frames[i - 1], frames[i]));
  return flicker_from_mae(mae);
}

std::optional<double> flicker_from_mae(const std::vector<double>& pair_mae) {
  auto m = mean(pair_mae);
  if (!m) return m;
  return mae_to_score(*m);
}

int dynamic_nmin(int pairs, const QualityConfig& cfg) {
  if (cfg.dyn_nmin > 0) return cfg.dyn_nmin;
  return std::max(1, (pairs + 1) / 2);
}

std::optional<double> dynamic_degree(const std::vector<double>& m, const QualityConfig& cfg) {
  if (m.empty()) return std::nullopt;
  const auto count = std::count_if(m.begin(), m.end(), [&](double v) { return v > cfg.dyn_tau; });
  return count >= dynamic_nmin(static_cast<int>(m.size()), cfg) ? 100.0 : 0.0;
}

std::optional<double> motion_smoothness(const std::vector<double>& pair_mae) {
  auto m = mean(pair_mae);
  if (!m) return m;
  return mae_to_score(*m);
}

double hps_norm(double raw_mean, const QualityConfig& cfg) {
  return std::clamp((raw_mean - cfg.hps_p1) / (cfg.hps_p99 - cfg.hps_p1) * 100.0, 0.0, 100.0);
}

}  // namespace wbench::quality
