#include "wbench/geom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wbench/errors.hpp"

namespace wbench::geom {
namespace {

// |dot| below this means the rotations are half a turn apart.
constexpr double kAntipodalTol = 1e-7;
constexpr double kLerpThreshold = 1.0 - 1e-12;
constexpr double kZeroLength = 1e-12;

int mirror_axis(MirrorPair pair) {
  switch (pair) {
    case MirrorPair::WS:
      return 2;
    case MirrorPair::AD:
    case MirrorPair::LR:
      return 0;
    case MirrorPair::UD:
      return 1;
  }
  return 0;
}

}  // namespace

Track make_track(std::span<const Pose> poses) {
  Track t;
  t.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) t.push_back({static_cast<int>(i), poses[i]});
  return t;
}

Quat axis_angle(const Vec3& axis, double angle) {
  return Quat(Eigen::AngleAxisd(angle, axis.normalized()));
}

Quat slerp(const Quat& q0, const Quat& q1, double t) {
  double dot = q0.dot(q1);
  Quat target = q1;
  if (dot < 0.0) {
    target.coeffs() = -q1.coeffs();
    dot = -dot;
  }
  if (dot < kAntipodalTol) {
    throw DegenerateError("slerp between rotations half a turn apart has no unique shortest arc");
  }
  if (dot > kLerpThreshold) {
    Quat q;
    q.coeffs() = (1.0 - t) * q0.coeffs() + t * target.coeffs();
    return q.normalized();
  }
  const double theta = std::acos(std::min(dot, 1.0));
  const double s = std::sin(theta);
  const double w0 = std::sin((1.0 - t) * theta) / s;
  const double w1 = std::sin(t * theta) / s;
  Quat q;
  q.coeffs() = w0 * q0.coeffs() + w1 * target.coeffs();
  return q.normalized();
}

double rotation_angle(const Quat& a, const Quat& b) {
  const Quat d = a.conjugate() * b;
  return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

double rotation_angle_from_trace(double trace) {
  const double c = std::clamp((trace - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

double rotation_angle(const Mat3& a, const Mat3& b) {
  return rotation_angle_from_trace((a.transpose() * b).trace());
}

double path_length(const Track& track) {
  double len = 0.0;
  for (std::size_t i = 1; i < track.size(); ++i) {
    len += (track[i].pose.translation - track[i - 1].pose.translation).norm();
  }
  return len;
}

double cumulative_rotation(const Track& track) {
  double ang = 0.0;
  for (std::size_t i = 1; i < track.size(); ++i) {
    ang += rotation_angle(track[i - 1].pose.rotation, track[i].pose.rotation);
  }
  return ang;
}

double net_rotation(const Track& track) {
  if (track.empty()) return 0.0;
  return rotation_angle(track.front().pose.rotation, track.back().pose.rotation);
}

Track arc_length_resample(const Track& track, int K) {
  if (K < 2) throw std::invalid_argument("arc_length_resample needs K >= 2");
  if (track.empty()) throw std::invalid_argument("arc_length_resample needs a non-empty track");

  const std::size_t n = track.size();
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    s[i] = s[i - 1] + (track[i].pose.translation - track[i - 1].pose.translation).norm();
  }
  if (s.back() <= kZeroLength) {
    for (std::size_t i = 1; i < n; ++i) {
      s[i] = s[i - 1] + rotation_angle(track[i - 1].pose.rotation, track[i].pose.rotation);
    }
  }
  const double total = s.back();

  Track out;
  out.reserve(K);
  if (total <= kZeroLength) {
    for (int k = 0; k < K; ++k) out.push_back({k, track.front().pose});
    return out;
  }

  std::size_t seg = 0;
  for (int k = 0; k < K; ++k) {
    if (k == 0) {
      out.push_back({k, track.front().pose});
      continue;
    }
    if (k == K - 1) {
      out.push_back({k, track.back().pose});
      continue;
    }
    const double target = total * static_cast<double>(k) / static_cast<double>(K - 1);
    while (seg + 2 < n && s[seg + 1] < target) ++seg;
    const double span = s[seg + 1] - s[seg];
    const double f = span > 0.0 ? std::clamp((target - s[seg]) / span, 0.0, 1.0) : 0.0;
    const Pose& a = track[seg].pose;
    const Pose& b = track[seg + 1].pose;
    Pose p;
    p.translation = (1.0 - f) * a.translation + f * b.translation;
    p.rotation = slerp(a.rotation, b.rotation, f);
    out.push_back({k, p});
  }
  return out;
}

Track align_gt_to_pred(const Track& gt, const Track& pred) {
  if (gt.empty() || pred.empty()) {
    throw std::invalid_argument("align_gt_to_pred needs non-empty tracks");
  }
  const Pose align = pred.front().pose * gt.front().pose.inverse();
  Track out;
  out.reserve(gt.size());
  for (const auto& sp : gt) out.push_back({sp.frame, align * sp.pose});
  return out;
}

Track normalize_to_start(const Track& track) {
  if (track.empty()) return {};
  const Pose inv = track.front().pose.inverse();
  Track out;
  out.reserve(track.size());
  for (const auto& sp : track) out.push_back({sp.frame, inv * sp.pose});
  return out;
}

Track mirror_track(const Track& track, MirrorPair pair) {
  const int axis = mirror_axis(pair);
  Track out;
  out.reserve(track.size());
  for (const auto& sp : track) {
    Pose p = sp.pose;
    p.translation[axis] = -p.translation[axis];
    // M R M with M a single-axis reflection keeps w and the reflected axis
    // component and negates the other two vector components.
    Eigen::Vector3d v = p.rotation.vec();
    for (int i = 0; i < 3; ++i) {
      if (i != axis) v[i] = -v[i];
    }
    p.rotation = Quat(p.rotation.w(), v.x(), v.y(), v.z());
    out.push_back({sp.frame, p});
  }
  return out;
}

}  // namespace wbench::geom
