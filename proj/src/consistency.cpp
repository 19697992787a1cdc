#include "wbench/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wbench/errors.hpp"

namespace wbench::consistency {

using geom::Pose;
using geom::Vec3;
using Eigen::Vector2d;

namespace {

// Bilinear sample of a single-channel float grid; nullopt outside or when a
// corner is not a positive finite depth.
std::optional<double> sample_depth(const std::vector<float>& map, int w, int h, double x, double y) {
  if (x < 0 || y < 0 || x > w - 1 || y > h - 1) return std::nullopt;
  const int x0 = std::min(static_cast<int>(std::floor(x)), w - 1);
  const int y0 = std::min(static_cast<int>(std::floor(y)), h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  double inv[4];
  const int xs[4] = {x0, x1, x0, x1};
  const int ys[4] = {y0, y0, y1, y1};
  for (int k = 0; k < 4; ++k) {
    const float d = map[static_cast<std::size_t>(ys[k]) * w + xs[k]];
    if (!(d > 0) || !std::isfinite(d)) return std::nullopt;
    inv[k] = 1.0 / d;
  }
  // Interpolating inverse depth keeps planes exact.
  const double v = (1 - fy) * ((1 - fx) * inv[0] + fx * inv[1]) + fy * ((1 - fx) * inv[2] + fx * inv[3]);
  return 1.0 / v;
}

std::optional<double> depth_at(const std::vector<float>& map, int w, int x, int y) {
  const float d = map[static_cast<std::size_t>(y) * w + x];
  if (!(d > 0) || !std::isfinite(d)) return std::nullopt;
  return d;
}

Vec3 back_project(double x, double y, double d, const Intrinsics& K) {
  return {(x - K.cx) / K.fx * d, (y - K.cy) / K.fy * d, d};
}

Vector2d project(const Vec3& X, const Intrinsics& K) {
  return {K.fx * X.x() / X.z() + K.cx, K.fy * X.y() / X.z() + K.cy};
}

const Pose* pose_of(const geom::Track& poses, int frame) {
  auto it = std::lower_bound(poses.begin(), poses.end(), frame,
                             [](const geom::StampedPose& p, int f) { return p.frame < f; });
  if (it == poses.end() || it->frame != frame) return nullptr;
  return &it->pose;
}

double sample_channel(const Image& img, double x, double y, int c) {
  const int x0 = std::min(static_cast<int>(std::floor(x)), img.width - 1);
  const int y0 = std::min(static_cast<int>(std::floor(y)), img.height - 1);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0, fy = y - y0;
  return (1 - fy) * ((1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c)) +
         fy * ((1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c));
}

}  // namespace

int find_return_frame(const geom::Track& track, const TurnRange& final_turn) {
  if (track.empty()) throw MissingPoseError("return frame needs poses");
  const auto& r0 = track.front().pose.rotation;
  int best = -1;
  double best_angle = std::numeric_limits<double>::infinity();
  for (const auto& sp : track) {
    if (sp.frame < final_turn.begin || sp.frame >= final_turn.end) continue;
    const double a = geom::rotation_angle(r0, sp.pose.rotation);
    if (a < best_angle) {
      best_angle = a;
      best = sp.frame;
    }
  }
  if (best < 0) throw MissingPoseError("no poses in the final turn");
  return best;
}

double gate_factor(double s_min, double tau) { return std::clamp((1.0 - s_min) / tau, 0.0, 1.0); }

std::vector<int> intermediate_frames(int frame_count, int n) {
  std::vector<int> out;
  if (frame_count < 2 || n < 1) return out;
  const int lo = 1, hi = frame_count - 1;
  if (n == 1) return {lo};
  for (int k = 0; k < n; ++k) {
    out.push_back(lo + static_cast<int>(std::lround(static_cast<double>(k) * (hi - lo) / (n - 1))));
  }
  return out;
}

SpatialScores spatial_scores(const std::vector<double>& d0, int return_idx,
                             const ConsistencyConfig& cfg) {
  if (return_idx < 0 || return_idx >= static_cast<int>(d0.size())) {
    throw std::out_of_range("return frame outside the distance row");
  }
  SpatialScores s;
  s.return_frame = return_idx;
  s.s_ret = 1.0 / (1.0 + d0[return_idx]);
  s.s_min = 1.0;
  for (int j : intermediate_frames(static_cast<int>(d0.size()), cfg.n_intermediate)) {
    s.s_min = std::min(s.s_min, 1.0 / (1.0 + d0[j]));
  }
  s.spatial = 100.0 * s.s_ret;
  s.gated = s.spatial * gate_factor(s.s_min, cfg.gate_tau);
  return s;
}

SegmentResult segment_continuity(const std::vector<double>& cut_probs,
                                 const ConsistencyConfig& cfg) {
  SegmentResult r;
  int last_cut = -1;
  for (int i = 0; i < static_cast<int>(cut_probs.size()); ++i) {
    if (cut_probs[i] <= cfg.cut_threshold) continue;
    r.flagged.push_back(i);
    // Flags closer than the minimum scene length belong to the same cut.
    if (last_cut < 0 || i - last_cut >= cfg.min_scene_len) {
      ++r.cuts;
      last_cut = i;
    }
  }
  r.score = r.cuts > 0 ? 0.0 : 100.0;
  return r;
}

MaskStats mask_stats(const Image& mask) {
  MaskStats s;
  double sx = 0, sy = 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y, 0) < 128) continue;
      ++s.area;
      sx += x + 0.5;
      sy += y + 0.5;
    }
  }
  if (s.area > 0) {
    s.cx = sx / s.area / mask.width;
    s.cy = sy / s.area / mask.height;
  }
  return s;
}

double perspective_consistency(const std::vector<MaskStats>& masks, const ConsistencyConfig& cfg) {
  std::vector<const MaskStats*> valid;
  for (const auto& m : masks) {
    if (m.area >= cfg.min_mask_area_px) valid.push_back(&m);
  }
  if (valid.empty() || masks.empty()) return 0.0;
  const double n = static_cast<double>(valid.size());
  double mx = 0, my = 0;
  for (auto* m : valid) {
    mx += m->cx;
    my += m->cy;
  }
  mx /= n;
  my /= n;
  double vx = 0, vy = 0;
  for (auto* m : valid) {
    vx += (m->cx - mx) * (m->cx - mx);
    vy += (m->cy - my) * (m->cy - my);
  }
  vx /= n;
  vy /= n;
  const double p = n / static_cast<double>(masks.size());
  return 100.0 * std::max(0.0, 1.0 - std::sqrt(vx + vy) / cfg.centroid_norm) * p;
}

std::optional<Vector2d> reproject_point(const Vector2d& u, double depth, const Intrinsics& K,
                                        const Pose& rel) {
  const Vec3 Xj = rel * back_project(u.x(), u.y(), depth, K);
  if (!(Xj.z() > 0)) return std::nullopt;
  return project(Xj, K);
}

std::vector<std::pair<int, int>> reprojection_pairs(int frame_count, int stride) {
  std::vector<std::pair<int, int>> out;
  if (frame_count < 2) return out;
  const int s = std::min(stride, frame_count - 1);
  for (int i = 0; i + s < frame_count; i += s) out.emplace_back(i, i + s);
  return out;
}

std::optional<ReprojectionResult> geometric_consistency(const DepthSeries& depth,
                                                        const geom::Track& poses, int frame_count,
                                                        const ConsistencyConfig& cfg) {
  const Intrinsics K = depth.intrinsics();
  const int W = depth.width, H = depth.height;
  const double diag = std::sqrt(static_cast<double>(W) * W + static_cast<double>(H) * H);
  const int G = cfg.geo_grid;
  const int rad = cfg.match_radius_px;
  ReprojectionResult res;
  double sum = 0;
  for (const auto& [i, j] : reprojection_pairs(frame_count, cfg.reproj_stride)) {
    const auto* di = depth.find(i);
    const auto* dj = depth.find(j);
    const Pose* pi = pose_of(poses, i);
    const Pose* pj = pose_of(poses, j);
    if (!di || !dj || !pi || !pj) continue;
    const Pose rel = pj->inverse() * *pi;
    double err = 0;
    long n = 0;
    for (int gy = 0; gy < G; ++gy) {
      for (int gx = 0; gx < G; ++gx) {
        const int x = std::min(W - 1, static_cast<int>((gx + 0.5) * W / G));
        const int y = std::min(H - 1, static_cast<int>((gy + 0.5) * H / G));
        const auto d = depth_at(*di, W, x, y);
        if (!d) continue;
        const Vec3 Xj = rel * back_project(x, y, *d, K);
        if (!(Xj.z() > 0)) {
          ++res.behind;
          continue;
        }
        const Vector2d uh = project(Xj, K);
        if (uh.x() < 0 || uh.y() < 0 || uh.x() > W - 1 || uh.y() > H - 1) continue;

        // Nearest back-projected 3D point of frame j around the prediction.
        double best = std::numeric_limits<double>::infinity();
        Vector2d best_px = uh;
        double best_depth = 0;
        auto consider = [&](double cx, double cy, std::optional<double> dd) {
          if (!dd) return;
          const double dist = (back_project(cx, cy, *dd, K) - Xj).squaredNorm();
          if (dist < best) {
            best = dist;
            best_px = {cx, cy};
            best_depth = *dd;
          }
        };
        consider(uh.x(), uh.y(), sample_depth(*dj, W, H, uh.x(), uh.y()));
        const int ux = static_cast<int>(std::lround(uh.x()));
        const int uy = static_cast<int>(std::lround(uh.y()));
        for (int yy = std::max(0, uy - rad); yy <= std::min(H - 1, uy + rad); ++yy) {
          for (int xx = std::max(0, ux - rad); xx <= std::min(W - 1, ux + rad); ++xx) {
            consider(xx, yy, depth_at(*dj, W, xx, yy));
          }
        }
        if (!std::isfinite(best)) continue;
        if (std::abs(best_depth - Xj.z()) / Xj.z() > cfg.occlusion_rel_depth_tol) {
          ++res.occluded;
          continue;
        }
        err += (uh - best_px).norm() / diag;
        ++n;
      }
    }
    if (n == 0) continue;
    res.points += n;
    sum += 100.0 / (1.0 + err / n);
    ++res.pairs;
  }
  if (res.pairs == 0) return std::nullopt;
  res.score = sum / res.pairs;
  return res;
}

double psnr_db(double mse, double cap) {
  if (mse <= 0) return cap;
  return std::min(cap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

std::optional<ReprojectionResult> photometric_consistency(const FrameSource& frames,
                                                          const DepthSeries& depth,
                                                          const geom::Track& poses,
                                                          int frame_count,
                                                          const ConsistencyConfig& cfg,
                                                          double* psnr) {
  const int W = depth.width, H = depth.height;
  ReprojectionResult res;
  double sum = 0;
  for (const auto& [i, j] : reprojection_pairs(frame_count, cfg.reproj_stride)) {
    const auto* di = depth.find(i);
    const auto* dj = depth.find(j);
    const Pose* pi = pose_of(poses, i);
    const Pose* pj = pose_of(poses, j);
    if (!di || !dj || !pi || !pj) continue;
    const Image src = frames(i);
    const Image dst = frames(j);
    if (src.width != dst.width || src.height != dst.height || src.channels != dst.channels) {
      throw FormatError("photometric: frame sizes differ");
    }
    // Intrinsics live in depth-map pixels; rescale them to the frame grid.
    const double sx = static_cast<double>(dst.width) / W;
    const double sy = static_cast<double>(dst.height) / H;
    const Intrinsics Kd = depth.intrinsics();
    const Intrinsics Ki{Kd.fx * sx, Kd.fy * sy, Kd.cx * sx, Kd.cy * sy};
    const Pose rel = pi->inverse() * *pj;
    double se = 0;
    long n = 0;
    for (int y = 0; y < dst.height; ++y) {
      for (int x = 0; x < dst.width; ++x) {
        const auto d = sample_depth(*dj, W, H, x / sx, y / sy);
        if (!d) continue;
        const Vec3 Xi = rel * back_project(x, y, *d, Ki);
        if (!(Xi.z() > 0)) {
          ++res.behind;
          continue;
        }
        const Vector2d u = project(Xi, Ki);
        if (u.x() < 0 || u.y() < 0 || u.x() > src.width - 1 || u.y() > src.height - 1) continue;
        const auto ds = sample_depth(*di, W, H, u.x() / sx, u.y() / sy);
        if (!ds || std::abs(*ds - Xi.z()) / Xi.z() > cfg.occlusion_rel_depth_tol) {
          ++res.occluded;
          continue;
        }
        for (int c = 0; c < dst.channels; ++c) {
          const double diff = sample_channel(src, u.x(), u.y(), c) - dst.at(x, y, c);
          se += diff * diff;
        }
        n += dst.channels;
      }
    }
    if (n == 0) continue;
    res.points += n / dst.channels;
    sum += psnr_db(se / n, cfg.psnr_cap_db);
    ++res.pairs;
  }
  if (res.pairs == 0) return std::nullopt;
  const double mean = sum / res.pairs;
  if (psnr) *psnr = mean;
  res.score = std::clamp(mean, 0.0, 100.0);
  return res;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine of vectors with different sizes");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += static_cast<double>(a[k]) * b[k];
    aa += static_cast<double>(a[k]) * a[k];
    bb += static_cast<double>(b[k]) * b[k];
  }
  if (aa <= 0 || bb <= 0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

std::optional<double> subject_consistency(const EmbeddingSeries& local,
                                          const EmbeddingSeries& global,
                                          const std::vector<long>* area,
                                          const ConsistencyConfig& cfg) {
  std::vector<int> valid;
  for (int f : local.frames) {
    if (!global.find(f)) continue;
    if (area && (f >= static_cast<int>(area->size()) || (*area)[f] < cfg.min_mask_area_px)) continue;
    valid.push_back(f);
  }
  if (valid.size() < 2) return std::nullopt;
  const auto& anchor = *global.find(valid.front());
  double sum = 0;
  for (std::size_t k = 1; k < valid.size(); ++k) {
    const double s_dino = cosine(*local.find(valid[k - 1]), *local.find(valid[k]));
    const double s_clip = cosine(anchor, *global.find(valid[k]));
    sum += 0.5 * (s_dino + s_clip);
  }
  return std::clamp(100.0 * sum / (valid.size() - 1), 0.0, 100.0);
}

std::optional<double> background_consistency(const EmbeddingSeries& emb) {
  if (emb.vectors.size() < 2) return std::nullopt;
  double sum = 0;
  for (std::size_t k = 1; k < emb.vectors.size(); ++k) sum += cosine(emb.vectors[k - 1], emb.vectors[k]);
  return std::clamp(100.0 * sum / (emb.vectors.size() - 1), 0.0, 100.0);
}

}  // namespace wbench::consistency
