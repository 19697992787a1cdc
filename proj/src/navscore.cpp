#include "wbench/navscore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wbench/errors.hpp"

namespace wbench::nav {

using geom::Pose;
using geom::Quat;
using geom::Track;
using geom::Vec3;

namespace {

Track place(const Track& canonical, const Pose& start) {
  Track out;
  out.reserve(canonical.size());
  for (const auto& sp : canonical) out.push_back({sp.frame, start * sp.pose});
  return out;
}

int sample_count(const Track& pred_turn, const NavConfig& cfg) {
  return pred_turn.size() >= 2 ? static_cast<int>(pred_turn.size()) : cfg.K;
}

// Heading axis actually followed by the camera. Third-person orbits turn the
// heading against the key so that the camera keeps facing the pivot.
Vec3 heading_axis(const ActionSpec& action, Perspective perspective) {
  const Vec3 a = rotation_axis(action);
  return perspective == Perspective::third_person ? Vec3(-a) : a;
}

void recover_rotation(const Track& pred_turn, Perspective perspective, const NavConfig& cfg,
                      GtParams& p) {
  p.theta = geom::net_rotation(pred_turn);
  const double chord =
      pred_turn.empty()
          ? 0.0
          : (pred_turn.back().pose.translation - pred_turn.front().pose.translation).norm();
  if (p.theta < geom::deg2rad(cfg.min_rot_deg)) {
    p.theta = geom::deg2rad(cfg.fallback_theta_deg);
    p.radius = cfg.fallback_R;
    p.fallback_rotation = true;
  } else {
    p.radius = chord_radius(chord, p.theta);
  }
  if (perspective == Perspective::third_person) p.radius = std::max(p.radius, cfg.tpp_min_R);
}

void recover_length(double L_pred, const NavConfig& cfg, GtParams& p) {
  if (L_pred >= cfg.min_disp) {
    p.length = L_pred;
  } else {
    p.length = cfg.fallback_len;
    p.fallback_length = true;
  }
}

}  // namespace

Vec3 translation_direction(const ActionSpec& action) {
  Vec3 d = Vec3::Zero();
  for (auto k : action.translation_keys) {
    switch (k) {
      case TranslationKey::W: d.z() += 1; break;
      case TranslationKey::S: d.z() -= 1; break;
      case TranslationKey::A: d.x() -= 1; break;
      case TranslationKey::D: d.x() += 1; break;
    }
  }
  const double n = d.norm();
  return n > 0 ? Vec3(d / n) : d;
}

Vec3 rotation_axis(const ActionSpec& action) {
  Vec3 a = Vec3::Zero();
  for (auto k : action.rotation_keys) {
    switch (k) {
      case RotationKey::left: a.y() -= 1; break;
      case RotationKey::right: a.y() += 1; break;
      case RotationKey::up: a.x() += 1; break;
      case RotationKey::down: a.x() -= 1; break;
    }
  }
  const double n = a.norm();
  return n > 0 ? Vec3(a / n) : a;
}

double chord_radius(double chord, double theta) {
  const double s = std::sin(theta / 2.0);
  if (std::abs(s) < 1e-12) return 0.0;
  return chord / (2.0 * s);
}

Track build_gt_translation(const ActionSpec& action, const Pose& start, double L_pred,
                           const NavConfig& cfg, int samples, GtParams* params) {
  GtParams p;
  recover_length(L_pred, cfg, p);
  const int n = samples >= 2 ? samples : cfg.K;
  const Vec3 d = translation_direction(action);
  Track canon;
  canon.reserve(n);
  for (int j = 0; j < n; ++j) {
    Pose pose;
    pose.translation = (p.length * j / (n - 1)) * d;
    canon.push_back({j, pose});
  }
  if (params) *params = p;
  return place(canon, start);
}

Track build_gt_rotation(const ActionSpec& action, const Pose& start, const Track& pred_turn,
                        Perspective perspective, const NavConfig& cfg, GtParams* params) {
  GtParams p;
  recover_rotation(pred_turn, perspective, cfg, p);
  const int n = sample_count(pred_turn, cfg);
  const Vec3 axis = heading_axis(action, perspective);
  const Vec3 arm(0, 0, p.radius);
  Track canon;
  canon.reserve(n);
  for (int j = 0; j < n; ++j) {
    const double phi = p.theta * j / (n - 1);
    Pose pose;
    pose.rotation = geom::axis_angle(axis, phi);
    if (perspective == Perspective::third_person) {
      // Pivot in front of the camera at the subject.
      pose.translation = arm - pose.rotation * arm;
    } else {
      // Pivot behind the camera; R = 0 turns in place.
      pose.translation = pose.rotation * arm - arm;
    }
    canon.push_back({j, pose});
  }
  if (params) *params = p;
  return place(canon, start);
}

Track build_gt_compound(const ActionSpec& action, const Pose& start, const Track& pred_turn,
                        Perspective perspective, const NavConfig& cfg, GtParams* params) {
  GtParams p;
  recover_rotation(pred_turn, perspective, cfg, p);
  recover_length(geom::path_length(pred_turn), cfg, p);
  const int n = sample_count(pred_turn, cfg);
  const Vec3 axis = heading_axis(action, perspective);
  const Vec3 d = translation_direction(action);
  const double step = p.length / (n - 1);
  Track canon;
  canon.reserve(n);
  Pose pose;
  canon.push_back({0, pose});
  for (int j = 1; j < n; ++j) {
    pose.rotation = geom::axis_angle(axis, p.theta * j / (n - 1));
    pose.translation += step * (pose.rotation * d);
    canon.push_back({j, pose});
  }
  if (params) *params = p;
  return place(canon, start);
}

Track build_gt(const ActionSpec& action, const Track& pred_turn, Perspective perspective,
               const NavConfig& cfg, GtParams* params) {
  if (pred_turn.empty()) throw MissingPoseError("navigation turn without poses");
  const Pose& start = pred_turn.front().pose;
  if (action.is_pure_translation()) {
    return build_gt_translation(action, start, geom::path_length(pred_turn), cfg,
                                sample_count(pred_turn, cfg), params);
  }
  if (action.is_pure_rotation()) {
    return build_gt_rotation(action, start, pred_turn, perspective, cfg, params);
  }
  if (action.is_compound()) {
    return build_gt_compound(action, start, pred_turn, perspective, cfg, params);
  }
  throw std::invalid_argument("navigation action without keys");
}

NateResult nate(const Track& gt, const Track& pred, double L_pred, double Theta_pred,
                const NavConfig& cfg) {
  if (gt.size() != pred.size() || gt.empty()) {
    throw std::invalid_argument("nate needs equally long non-empty tracks");
  }
  double st = 0, sr = 0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    st += (gt[k].pose.translation - pred[k].pose.translation).squaredNorm();
    const double a = geom::rotation_angle(gt[k].pose.rotation, pred[k].pose.rotation);
    sr += a * a;
  }
  NateResult r;
  r.ate_t = std::sqrt(st / gt.size());
  r.ate_r = std::sqrt(sr / gt.size());
  r.t = std::min(r.ate_t / std::max(L_pred, cfg.denom_t_min), 1.0);
  r.r = std::min(r.ate_r / std::max(Theta_pred, geom::deg2rad(cfg.denom_r_min_deg)), 1.0);
  return r;
}

RpeResult rpe(const Track& gt, const Track& pred) {
  if (gt.size() != pred.size()) throw std::invalid_argument("rpe needs equally long tracks");
  if (gt.size() < 2) return {};
  double st = 0, sr = 0;
  const std::size_t steps = gt.size() - 1;
  for (std::size_t k = 1; k < gt.size(); ++k) {
    const Pose dg = gt[k - 1].pose.inverse() * gt[k].pose;
    const Pose dp = pred[k - 1].pose.inverse() * pred[k].pose;
    const Pose e = dg.inverse() * dp;
    st += e.translation.squaredNorm();
    const double a = geom::rotation_angle(Quat::Identity(), e.rotation);
    sr += a * a;
  }
  return {std::sqrt(st / steps), std::sqrt(sr / steps)};
}

std::optional<std::vector<geom::MirrorPair>> pair_mirrors(const ActionSpec& a,
                                                          const ActionSpec& b) {
  using geom::MirrorPair;
  if (a.translation_keys.size() != b.translation_keys.size() ||
      a.rotation_keys.size() != b.rotation_keys.size()) {
    return std::nullopt;
  }
  std::vector<MirrorPair> mirrors;
  auto group = [&](auto k1, auto k2, MirrorPair pair, const auto& sa, const auto& sb) {
    const bool a1 = sa.count(k1), a2 = sa.count(k2), b1 = sb.count(k1), b2 = sb.count(k2);
    if (a1 + a2 != b1 + b2) return false;
    if (a1 != b1) mirrors.push_back(pair);
    return true;
  };
  const bool ok =
      group(TranslationKey::W, TranslationKey::S, MirrorPair::WS, a.translation_keys,
            b.translation_keys) &&
      group(TranslationKey::A, TranslationKey::D, MirrorPair::AD, a.translation_keys,
            b.translation_keys) &&
      group(RotationKey::left, RotationKey::right, MirrorPair::LR, a.rotation_keys,
            b.rotation_keys) &&
      group(RotationKey::up, RotationKey::down, MirrorPair::UD, a.rotation_keys, b.rotation_keys);
  if (!ok) return std::nullopt;
  if (a.translation_keys.empty() && a.rotation_keys.empty()) return std::nullopt;
  return mirrors;
}

ConsistencyResult turn_consistency(const std::vector<std::pair<ActionSpec, Track>>& turns,
                                   const NavConfig& cfg) {
  ConsistencyResult r;
  std::vector<Track> canon;
  std::vector<double> L, Th;
  for (const auto& [action, track] : turns) {
    canon.push_back(geom::normalize_to_start(track));
    L.push_back(geom::path_length(track));
    Th.push_back(geom::net_rotation(track));
  }
  double st = 0, sr = 0;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    for (std::size_t j = i + 1; j < turns.size(); ++j) {
      const auto mirrors = pair_mirrors(turns[i].first, turns[j].first);
      if (!mirrors || canon[i].empty() || canon[j].empty()) continue;
      Track other = canon[j];
      for (auto m : *mirrors) other = geom::mirror_track(other, m);
      const Track a = geom::arc_length_resample(canon[i], cfg.K);
      const Track b = geom::arc_length_resample(other, cfg.K);
      const auto e = nate(a, b, 0.5 * (L[i] + L[j]), 0.5 * (Th[i] + Th[j]), cfg);
      st += e.t;
      sr += e.r;
      ++r.pairs;
    }
  }
  if (r.pairs > 0) {
    r.cnate_t = st / r.pairs;
    r.cnate_r = sr / r.pairs;
  }
  return r;
}

NavBreakdown nav_score(const CaseManifest& c, const PoseTrack& poses, const NavConfig& cfg) {
  if (!c.has_turn_kind(TurnKind::navigation)) {
    throw std::invalid_argument(c.case_id + ": no navigation turn");
  }
  if (poses.turns.size() != c.turns.size()) {
    throw MissingPoseError(c.case_id + ": pose track has " + std::to_string(poses.turns.size()) +
                           " turn ranges for " + std::to_string(c.turns.size()) + " turns");
  }
  NavBreakdown out;
  std::vector<std::pair<ActionSpec, Track>> nav_turns;
  Track gt_all, pred_all;
  double L_total = 0, Theta_total = 0, sum_rpe_t = 0, sum_rpe_r = 0;
  for (const auto& turn : c.turns) {
    if (turn.kind != TurnKind::navigation) continue;
    const Track pred = poses.slice(poses.turns[turn.index]);
    if (pred.empty()) {
      throw MissingPoseError(c.case_id + ": turn " + std::to_string(turn.index) + " has no poses");
    }
    TurnNav tn;
    tn.turn = turn.index;
    tn.action = turn.action.label();
    tn.L_pred = geom::path_length(pred);
    tn.Theta_pred = geom::net_rotation(pred);
    const Track gt = build_gt(turn.action, pred, c.perspective, cfg, &tn.gt);
    const Track gk = geom::arc_length_resample(gt, cfg.K);
    const Track pk = geom::arc_length_resample(pred, cfg.K);
    const auto e = nate(gk, pk, tn.L_pred, tn.Theta_pred, cfg);
    tn.nate_t = e.t;
    tn.nate_r = e.r;
    const auto d = rpe(gk, pk);
    tn.rpe_t = d.t;
    tn.rpe_r = d.r;
    tn.score = 100.0 * (1.0 - 0.5 * (e.t + e.r));
    L_total += tn.L_pred;
    Theta_total += tn.Theta_pred;
    sum_rpe_t += d.t;
    sum_rpe_r += d.r;
    gt_all.insert(gt_all.end(), gk.begin(), gk.end());
    pred_all.insert(pred_all.end(), pk.begin(), pk.end());
    out.turns.push_back(tn);
    nav_turns.emplace_back(turn.action, pred);
  }
  const double n = static_cast<double>(out.turns.size());
  const auto all = nate(gt_all, pred_all, L_total, Theta_total, cfg);
  out.nate_t = all.t;
  out.nate_r = all.r;
  out.acc = 1.0 - 0.5 * (all.t + all.r);
  const auto cons = turn_consistency(nav_turns, cfg);
  out.cnate_t = cons.cnate_t;
  out.cnate_r = cons.cnate_r;
  out.pairs = cons.pairs;
  out.cons = 1.0 - 0.5 * (cons.cnate_t + cons.cnate_r);
  out.rpe_t = sum_rpe_t / n;
  out.rpe_r = sum_rpe_r / n;
  out.nav_score = 100.0 * 0.5 * (out.acc + out.cons);
  return out;
}

}  // namespace wbench::nav
