#include <gtest/gtest.h>

#include <cmath>

#include "wbench/errors.hpp"
#include "wbench/manifest.hpp"
#include "wbench/navscore.hpp"
#include "wbench/synth.hpp"
#include "tempdir.hpp"

using namespace wbench;
using namespace wbench::geom;
using wbench::testing::fixture;

namespace {

const NavConfig kCfg;

ActionSpec keys(const std::string& s) { return parse_navigation_keys(s); }

Track line(const Vec3& dir, double len, int n) {
  Track t;
  for (int i = 0; i < n; ++i) {
    Pose p;
    p.translation = dir * (len * i / (n - 1));
    t.push_back({i, p});
  }
  return t;
}

// Third-person orbit about a pivot R ahead of the start camera, heading phi
// about +y (analytic circle).
Track orbit(double R, double deg, int n) {
  Track t;
  for (int i = 0; i < n; ++i) {
    const double phi = deg2rad(deg) * i / (n - 1);
    Pose p;
    p.rotation = axis_angle(Vec3::UnitY(), phi);
    p.translation = Vec3(-R * std::sin(phi), 0, R - R * std::cos(phi));
    t.push_back({i, p});
  }
  return t;
}

CaseManifest nav_case(Perspective persp, const std::vector<std::string>& seq) {
  CaseManifest c;
  c.case_id = "c";
  c.scene_text = "s";
  c.perspective = persp;
  if (persp == Perspective::third_person) c.subject_category = SubjectCategory::human;
  c.in_nav_split = true;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    c.turns.push_back({static_cast<int>(i), TurnKind::navigation, keys(seq[i])});
  }
  return c;
}

double score(const CaseManifest& c, const synth::SynthOptions& opt) {
  return nav::nav_score(c, synth::synth_poses(c, opt), kCfg).nav_score;
}

}  // namespace

TEST(KeySemantics, Directions) {
  EXPECT_EQ(nav::translation_direction(keys("W")), Vec3(0, 0, 1));
  EXPECT_EQ(nav::translation_direction(keys("A")), Vec3(-1, 0, 0));
  EXPECT_LT((nav::translation_direction(keys("W+D")) - Vec3(1, 0, 1) / std::sqrt(2.0)).norm(), 1e-15);
  EXPECT_EQ(nav::rotation_axis(keys("right")), Vec3(0, 1, 0));
  EXPECT_EQ(nav::rotation_axis(keys("up")), Vec3(1, 0, 0));
}

TEST(GtTranslation, LineFromPredictedLength) {
  nav::GtParams p;
  const Track gt = nav::build_gt_translation(keys("W"), Pose::identity(), 2.0, kCfg, 20, &p);
  ASSERT_EQ(gt.size(), 20u);
  EXPECT_EQ(gt.front().pose.translation, Vec3::Zero());
  EXPECT_LT((gt.back().pose.translation - Vec3(0, 0, 2)).norm(), 1e-15);
  EXPECT_FALSE(p.fallback_length);
}

TEST(GtTranslation, FallbackLength) {
  nav::GtParams p;
  const Track gt = nav::build_gt_translation(keys("W"), Pose::identity(), 0.05, kCfg, 20, &p);
  EXPECT_TRUE(p.fallback_length);
  EXPECT_NEAR(path_length(gt), 1.0, 1e-12);
}

TEST(GtTranslation, DiagonalKeys) {
  const Track gt = nav::build_gt_translation(keys("W+D"), Pose::identity(), 1.0, kCfg, 20);
  EXPECT_LT((gt.back().pose.translation - Vec3(1, 0, 1) / std::sqrt(2.0)).norm(), 1e-12);
}

TEST(GtTranslation, FollowsStartPose) {
  Pose start;
  start.rotation = axis_angle(Vec3::UnitY(), kPi / 2);
  start.translation = Vec3(1, 2, 3);
  const Track gt = nav::build_gt_translation(keys("W"), start, 2.0, kCfg, 5);
  EXPECT_LT((gt.back().pose.translation - Vec3(3, 2, 3)).norm(), 1e-12);
}

TEST(GtRotation, RecoversOrbitRadius) {
  const double R0 = 2.5;
  const Track pred = orbit(R0, 90, 30);
  const double chord = (pred.back().pose.translation - pred.front().pose.translation).norm();
  EXPECT_NEAR(chord, std::sqrt(2.0) * R0, 1e-12);
  nav::GtParams p;
  const Track gt = nav::build_gt_rotation(keys("left"), pred.front().pose, pred,
                                          Perspective::third_person, kCfg, &p);
  EXPECT_NEAR(p.radius, R0, 1e-6);
  EXPECT_NEAR(p.theta, kPi / 2, 1e-12);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    EXPECT_LT((gt[i].pose.translation - pred[i].pose.translation).norm(), 1e-9);
  }
}

TEST(GtRotation, FallbackForTinyRotation) {
  const Track pred = orbit(2.0, 1.0, 10);
  nav::GtParams p;
  nav::build_gt_rotation(keys("left"), pred.front().pose, pred, Perspective::first_person, kCfg, &p);
  EXPECT_TRUE(p.fallback_rotation);
  EXPECT_NEAR(p.theta, deg2rad(30.0), 1e-15);
  EXPECT_EQ(p.radius, 1.0);
}

TEST(GtRotation, ThirdPersonMinimumRadius) {
  const Track pred = orbit(0.2, 60, 10);
  nav::GtParams p;
  nav::build_gt_rotation(keys("left"), pred.front().pose, pred, Perspective::third_person, kCfg, &p);
  EXPECT_EQ(p.radius, 1.0);
  nav::build_gt_rotation(keys("left"), pred.front().pose, pred, Perspective::first_person, kCfg, &p);
  EXPECT_NEAR(p.radius, 0.2, 1e-9);
}

TEST(GtRotation, ChordRadius) {
  EXPECT_NEAR(nav::chord_radius(std::sqrt(2.0), kPi / 2), 1.0, 1e-12);
  EXPECT_EQ(nav::chord_radius(1.0, 0.0), 0.0);
}

TEST(Nate, IdenticalTracksScoreZero) {
  const Track t = line(Vec3::UnitZ(), 2, 20);
  const auto e = nav::nate(t, t, 2, 0, kCfg);
  EXPECT_EQ(e.t, 0);
  EXPECT_EQ(e.r, 0);
}

TEST(Nate, OpposedLinesCap) {
  const int K = 20;
  const Track pred = line(Vec3::UnitX(), 2, K);
  const Track gt = line(-Vec3::UnitX(), 2, K);
  double ss = 0;
  for (int k = 0; k < K; ++k) ss += std::pow(4.0 * k / (K - 1), 2);
  const double rms = std::sqrt(ss / K);
  const auto e = nav::nate(gt, pred, 2.0, 0.0, kCfg);
  EXPECT_NEAR(e.ate_t, rms, 1e-12);
  EXPECT_EQ(e.t, std::min(rms / 2.0, 1.0));
  EXPECT_EQ(e.t, 1.0);
}

TEST(Nate, ZeroMotionUsesMinimumDenominator) {
  const int K = 20;
  Track pred;
  for (int k = 0; k < K; ++k) pred.push_back({k, Pose::identity()});
  const Track gt = line(Vec3::UnitZ(), 1.0, K);
  const auto e = nav::nate(gt, pred, 0.0, 0.0, kCfg);
  EXPECT_EQ(e.t, std::min(e.ate_t / 0.5, 1.0));
  const Track half = line(Vec3::UnitZ(), 0.2, K);
  const auto e2 = nav::nate(half, pred, 0.0, 0.0, kCfg);
  EXPECT_NEAR(e2.t, e2.ate_t / 0.5, 1e-15);
  EXPECT_LT(e2.t, 1.0);
}

TEST(Rpe, ZeroForIdenticalAndConstantOffset) {
  const Track t = orbit(2, 45, 10);
  EXPECT_EQ(nav::rpe(t, t).t, 0);
  Track shifted = t;
  for (auto& sp : shifted) sp.pose.translation += Vec3(5, 0, 0);
  EXPECT_LT(nav::rpe(t, shifted).t, 1e-12);
}

TEST(Consistency, PairGroups) {
  EXPECT_TRUE(nav::pair_mirrors(keys("W"), keys("W"))->empty());
  EXPECT_EQ(nav::pair_mirrors(keys("W"), keys("S"))->size(), 1u);
  EXPECT_EQ(nav::pair_mirrors(keys("W+left"), keys("S+right"))->size(), 2u);
  EXPECT_FALSE(nav::pair_mirrors(keys("W"), keys("left")).has_value());
  EXPECT_FALSE(nav::pair_mirrors(keys("W"), keys("A")).has_value());
  EXPECT_FALSE(nav::pair_mirrors(keys("W"), keys("W+A")).has_value());
}

TEST(Consistency, IdenticalTurns) {
  const Track t = line(Vec3::UnitZ(), 1, 12);
  const auto r = nav::turn_consistency({{keys("W"), t}, {keys("W"), t}}, kCfg);
  EXPECT_EQ(r.pairs, 1);
  EXPECT_EQ(r.cnate_t, 0);
  EXPECT_EQ(r.cnate_r, 0);
}

TEST(Consistency, MirroredStrafes) {
  Track a = line(-Vec3::UnitX(), 1, 12);
  Track d = line(Vec3::UnitX(), 1, 12);
  for (auto& sp : d) sp.pose.translation += Vec3(4, 1, 0);  // normalized away
  const auto r = nav::turn_consistency({{keys("A"), a}, {keys("D"), d}}, kCfg);
  EXPECT_EQ(r.pairs, 1);
  EXPECT_LT(r.cnate_t, 1e-12);
  EXPECT_LT(r.cnate_r, 1e-12);
}

TEST(Consistency, NoSameGroupPair) {
  const auto r = nav::turn_consistency(
      {{keys("W"), line(Vec3::UnitZ(), 1, 5)}, {keys("left"), orbit(0, 30, 5)}}, kCfg);
  EXPECT_EQ(r.pairs, 0);
  EXPECT_EQ(r.cnate_t, 0);
  EXPECT_EQ(r.cnate_r, 0);
}

TEST(NavScore, PerfectRollout) {
  for (auto persp : {Perspective::first_person, Perspective::third_person}) {
    const auto c = nav_case(persp, {"W", "left", "left", "W"});
    const auto nb = nav::nav_score(c, synth::synth_poses(c, {}), kCfg);
    EXPECT_NEAR(nb.nav_score, 100.0, 1e-6);
    EXPECT_EQ(nb.turns.size(), 4u);
    EXPECT_EQ(nb.pairs, 2);
  }
}

TEST(NavScore, EveryTrajectoryExampleIsPerfect) {
  for (const auto& c : load_manifest(fixture("trajectories.manifest").string())) {
    EXPECT_NEAR(score(c, {}), 100.0, 1e-6) << c.case_id;
  }
}

TEST(NavScore, ReversedRotationScoresLower) {
  synth::SynthOptions rev;
  rev.mode = synth::Mode::reversed_rotation;
  for (auto persp : {Perspective::first_person, Perspective::third_person}) {
    const auto c = nav_case(persp, {"W", "right", "right", "left"});
    const auto nb = nav::nav_score(c, synth::synth_poses(c, rev), kCfg);
    EXPECT_LT(nb.nav_score, 100.0 - 1e-3);
    for (const auto& t : nb.turns) {
      if (t.action != "W") EXPECT_EQ(t.nate_r, 1.0) << t.action;
    }
  }
}

TEST(NavScore, StaticRolloutUsesFallbacks) {
  synth::SynthOptions st;
  st.mode = synth::Mode::static_pose;
  const auto c = nav_case(Perspective::first_person, {"W", "left", "left", "W"});
  const auto nb = nav::nav_score(c, synth::synth_poses(c, st), kCfg);
  for (const auto& t : nb.turns) {
    EXPECT_TRUE(t.gt.fallback_length || t.gt.fallback_rotation);
    EXPECT_GT(t.nate_t + t.nate_r, 0.0);
  }
  // Identical static turns agree perfectly with each other.
  EXPECT_EQ(nb.cons, 1.0);
  EXPECT_LT(nb.acc, 0.5);
  EXPECT_NEAR(nb.nav_score, 50.0 * (nb.acc + 1.0), 1e-12);
}

TEST(NavScore, TranslationNoiseLandsBetweenStaticAndPerfect) {
  synth::SynthOptions st, noisy;
  st.mode = synth::Mode::static_pose;
  noisy.sigma_t = 0.05;
  for (const auto& c : load_manifest(fixture("mini.manifest").string())) {
    if (!c.in_nav_split) continue;
    const double s = score(c, noisy);
    EXPECT_GT(s, score(c, st)) << c.case_id;
    EXPECT_LT(s, score(c, {})) << c.case_id;
  }
}

TEST(NavScore, MissingPoses) {
  const auto c = nav_case(Perspective::first_person, {"W", "S"});
  PoseTrack p = synth::synth_poses(c, {});
  p.turns.pop_back();
  EXPECT_THROW(nav::nav_score(c, p, kCfg), MissingPoseError);
  PoseTrack empty = synth::synth_poses(c, {});
  empty.track.clear();
  EXPECT_THROW(nav::nav_score(c, empty, kCfg), MissingPoseError);
}
