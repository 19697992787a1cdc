#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace wbench::geom {

using Quat = Eigen::Quaterniond;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid camera-to-world transform. Rotation is kept as a unit quaternion;
/// matrices appear only at I/O boundaries.
struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Pose operator*(const Pose& rhs) const {
    return {(rotation * rhs.rotation).normalized(), rotation * rhs.translation + translation};
  }
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  Pose inverse() const {
    const Quat inv = rotation.conjugate();
    return {inv, -(inv * translation)};
  }
  Mat3 matrix() const { return rotation.toRotationMatrix(); }
};

struct StampedPose {
  int frame = 0;
  Pose pose;
};

/// Ordered poses with strictly increasing frame indices.
using Track = std::vector<StampedPose>;

/// Wraps poses as a track with frame indices 0..n-1.
Track make_track(std::span<const Pose> poses);

/// Spherical interpolation along the shortest arc. Throws DegenerateError when
/// the two rotations are half a turn apart, where the shortest arc is not
/// unique.
Quat slerp(const Quat& q0, const Quat& q1, double t);

/// Geodesic angle in [0, pi] between two rotations.
double rotation_angle(const Quat& a, const Quat& b);
double rotation_angle(const Mat3& a, const Mat3& b);
/// arccos((trace - 1) / 2) with the argument clamped to [-1, 1].
double rotation_angle_from_trace(double trace);

double path_length(const Track& track);
/// Sum of geodesic angles between consecutive poses.
double cumulative_rotation(const Track& track);
/// Geodesic angle between the first and last pose.
double net_rotation(const Track& track);

/// Resamples to K poses at uniform fractions of cumulative path length.
/// Positions are interpolated linearly and rotations with slerp. Tracks with
/// no translation are parameterized by cumulative rotation angle instead; a
/// track with neither yields K copies of its first pose.
Track arc_length_resample(const Track& track, int K);

/// Applies to every GT pose the rigid transform taking gt[0] onto pred[0].
Track align_gt_to_pred(const Track& gt, const Track& pred);

/// Re-expresses a track relative to its first pose (first pose = identity).
Track normalize_to_start(const Track& track);

enum class MirrorPair { WS, AD, LR, UD };

/// Reflects translations and headings across the plane that swaps the two
/// members of a symmetric action pair. WS flips z; AD and LR flip x; UD flips y.
Track mirror_track(const Track& track, MirrorPair pair);

Quat axis_angle(const Vec3& axis, double angle);

constexpr double kPi = 3.14159265358979323846;
constexpr double deg2rad(double d) { return d * kPi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace wbench::geom
