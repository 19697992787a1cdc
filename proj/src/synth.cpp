#include "wbench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wbench/digest.hpp"
#include "wbench/errors.hpp"
#include "wbench/image.hpp"

namespace wbench::synth {

using geom::Pose;
using geom::Quat;
using geom::Vec3;
namespace fs = std::filesystem;

namespace {

// Standard normals from the raw mt19937_64 stream; std::normal_distribution
// differs between standard libraries.
class Normal {
 public:
  explicit Normal(std::uint64_t seed) : rng_(seed) {}
  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * geom::kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * geom::kPi * u2);
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 rng_;
  double spare_ = 0;
  bool has_spare_ = false;
};

Quat about(const Vec3& axis, double angle) { return Quat(Eigen::AngleAxisd(angle, axis)); }

// Camera-frame rotation realizing one rotation key at angle phi, read off the
// key semantics: first person turns the view, third person swings the camera
// around a pivot in front of it.
Quat key_rotation(RotationKey k, Perspective p, double phi) {
  const bool fpp = p == Perspective::first_person;
  switch (k) {
    case RotationKey::left: return about(Vec3::UnitY(), fpp ? -phi : phi);
    case RotationKey::right: return about(Vec3::UnitY(), fpp ? phi : -phi);
    case RotationKey::up: return about(Vec3::UnitX(), fpp ? phi : -phi);
    case RotationKey::down: return about(Vec3::UnitX(), fpp ? -phi : phi);
  }
  return Quat::Identity();
}

Vec3 key_direction(const std::set<TranslationKey>& keys) {
  Vec3 d = Vec3::Zero();
  for (auto k : keys) {
    if (k == TranslationKey::W) d += Vec3::UnitZ();
    if (k == TranslationKey::S) d -= Vec3::UnitZ();
    if (k == TranslationKey::A) d -= Vec3::UnitX();
    if (k == TranslationKey::D) d += Vec3::UnitX();
  }
  return d.norm() > 0 ? Vec3(d.normalized()) : d;
}

Quat heading(const ActionSpec& a, Perspective p, double phi) {
  Quat q = Quat::Identity();
  for (auto k : a.rotation_keys) q = q * key_rotation(k, p, phi);
  return q;
}

// Local motion of one navigation turn, sampled at n frames.
std::vector<Pose> turn_motion(const ActionSpec& a, Perspective p, int n, const SynthOptions& opt) {
  std::vector<Pose> out(n);
  const double sign = opt.mode == Mode::reversed_rotation ? -1.0 : 1.0;
  const double theta = sign * geom::deg2rad(opt.turn_angle_deg);
  const Vec3 d = key_direction(a.translation_keys);
  const double L = opt.step_length;
  if (a.rotation_keys.empty()) {
    for (int j = 0; j < n; ++j) out[j].translation = (L * j / (n - 1)) * d;
    return out;
  }
  if (a.translation_keys.empty()) {
    for (int j = 0; j < n; ++j) {
      const Quat q = heading(a, p, theta * j / (n - 1));
      out[j].rotation = q;
      if (p == Perspective::third_person) {
        const Vec3 pivot(0, 0, opt.orbit_radius);
        out[j].translation = pivot - q * pivot;
      }
    }
    return out;
  }
  // Turn while moving: the heading advances each frame and the step follows
  // the new heading.
  for (int j = 1; j < n; ++j) {
    const Quat q = heading(a, p, theta * j / (n - 1));
    out[j].rotation = q;
    out[j].translation = out[j - 1].translation + (L / (n - 1)) * (q * d);
  }
  return out;
}

std::uint64_t case_seed(std::uint64_t seed, const std::string& case_id, const char* stream) {
  return sha256_u64(std::to_string(seed) + ":" + case_id + ":" + stream);
}

// Fronto-parallel textured plane at z = kPlaneZ in world coordinates.
constexpr double kPlaneZ = 6.0;

double texture(double X, double Y, int c) {
  const double f[3][2] = {{1.7, 0.9}, {1.1, 2.3}, {2.9, 1.3}};
  return 128.0 + 55.0 * std::sin(f[c][0] * X + 0.3 * c) * std::cos(f[c][1] * Y - 0.2 * c) +
         30.0 * std::sin(0.7 * X + 1.1 * Y + c);
}

struct Render {
  Image frame;
  std::vector<float> depth;
};

Render render(const Pose& pose, const SynthOptions& opt, double fx, double fy, double cx, double cy) {
  Render r;
  r.frame.width = opt.width;
  r.frame.height = opt.height;
  r.frame.channels = 3;
  r.frame.data.assign(static_cast<std::size_t>(opt.width) * opt.height * 3, 0);
  r.depth.assign(static_cast<std::size_t>(opt.width) * opt.height, 0.0f);
  const Eigen::Matrix3d R = pose.rotation.toRotationMatrix();
  const Vec3& o = pose.translation;
  for (int y = 0; y < opt.height; ++y) {
    for (int x = 0; x < opt.width; ++x) {
      const Vec3 ray_cam((x - cx) / fx, (y - cy) / fy, 1.0);
      const Vec3 ray = R * ray_cam;
      const double t = ray.z() > 1e-9 ? (kPlaneZ - o.z()) / ray.z() : -1.0;
      const std::size_t px = static_cast<std::size_t>(y) * opt.width + x;
      if (t <= 0) {
        for (int c = 0; c < 3; ++c) r.frame.data[px * 3 + c] = 20;
        continue;
      }
      const Vec3 X = o + t * ray;
      // Depth along the optical axis equals t because ray_cam.z == 1.
      r.depth[px] = static_cast<float>(t);
      for (int c = 0; c < 3; ++c) {
        r.frame.data[px * 3 + c] = static_cast<std::uint8_t>(std::clamp(std::lround(texture(X.x(), X.y(), c)), 0L, 255L));
      }
    }
  }
  return r;
}

Image disc_mask(int w, int h, double cx, double cy, double radius) {
  Image m;
  m.width = w;
  m.height = h;
  m.channels = 1;
  m.data.assign(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if ((x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy) <= radius * radius) m.at(x, y, 0) = 255;
    }
  }
  return m;
}

std::vector<float> embed(Normal& g, const std::vector<float>& base, double drift) {
  std::vector<float> v(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) v[k] = static_cast<float>(base[k] + drift * g());
  return v;
}

void write_full(const CaseManifest& c, const SynthOptions& opt, const PoseTrack& poses, const fs::path& dir) {
  const int N = static_cast<int>(poses.track.size());
  const double fx = 0.9 * opt.width, fy = fx, cx = opt.width / 2.0, cy = opt.height / 2.0;
  DepthSeries depth;
  depth.width = opt.width;
  depth.height = opt.height;
  depth.fx = static_cast<float>(fx);
  depth.fy = static_cast<float>(fy);
  depth.cx = static_cast<float>(cx);
  depth.cy = static_cast<float>(cy);
  fs::create_directories(dir / "frames");
  for (int i = 0; i < N; ++i) {
    auto r = render(poses.track[i].pose, opt, fx, fy, cx, cy);
    write_netpbm((dir / "frames" / (frame_stem(i) + ".ppm")).string(), r.frame);
    depth.frames.push_back(i);
    depth.maps.push_back(std::move(r.depth));
  }
  write_file(dir / "depth.bin", serialize_depth(depth));

  if (c.perspective == Perspective::third_person) {
    fs::create_directories(dir / "masks");
    const Image m = disc_mask(opt.width, opt.height, cx, cy, opt.height / 5.0);
    for (int i = 0; i < N; ++i) write_netpbm((dir / "masks" / (frame_stem(i) + ".pgm")).string(), m);
  }

  Normal g(case_seed(opt.seed, c.case_id, "sidecars"));
  fs::create_directories(dir / "embeddings");
  const int dim = 16;
  for (const auto& role : kEmbeddingRoles) {
    if (role != "background" && !c.subject_category) continue;
    std::vector<float> base(dim);
    for (auto& b : base) b = static_cast<float>(g());
    EmbeddingSeries e;
    e.dim = dim;
    for (int i = 0; i < N; ++i) {
      e.frames.push_back(i);
      e.vectors.push_back(embed(g, base, 0.05));
    }
    write_file(dir / "embeddings" / (role + ".emb"), serialize_embeddings(e));
  }

  fs::create_directories(dir / "scalars");
  auto dense = [&](double mean, double sd) {
    ScalarSeries s;
    for (int i = 0; i < N; ++i) {
      s.frames.push_back(i);
      s.values.push_back(mean + sd * g());
    }
    return s;
  };
  write_file(dir / "scalars" / "aesthetic_raw.txt", serialize_scalar_series(dense(6.0, 0.2)));
  write_file(dir / "scalars" / "imaging_raw.txt", serialize_scalar_series(dense(65.0, 2.0)));
  write_file(dir / "scalars" / "hps_raw.txt", serialize_scalar_series(dense(7.0, 0.3)));
  ScalarSeries cut = dense(0.0, 0.0);
  for (auto& v : cut.values) v = 0.01;
  write_file(dir / "scalars" / "cut_prob.txt", serialize_scalar_series(cut));

  // Flow magnitude and perceptual distance follow the actual camera motion.
  ScalarSeries flow, smooth, d0;
  const Pose& p0 = poses.track.front().pose;
  for (int i = 0; i < N; ++i) {
    const Pose& p = poses.track[i].pose;
    const double move = (p.translation - p0.translation).norm() / kPlaneZ + geom::rotation_angle(p0.rotation, p.rotation);
    d0.frames.push_back(i);
    d0.values.push_back(0.6 * (1.0 - std::exp(-2.0 * move)));
    if (i + 1 < N) {
      const Pose& q = poses.track[i + 1].pose;
      const double px = fx * ((q.translation - p.translation).norm() / kPlaneZ + geom::rotation_angle(p.rotation, q.rotation));
      flow.frames.push_back(i);
      flow.values.push_back(px);
    }
    if (i % 2 == 0 && i + 2 < N) {
      smooth.frames.push_back(i);
      smooth.values.push_back(std::abs(0.5 + 0.05 * g()));
    }
  }
  write_file(dir / "scalars" / "flow_top5_mean.txt", serialize_scalar_series(flow));
  write_file(dir / "scalars" / "smoothness_pair_mae.txt", serialize_scalar_series(smooth));
  write_file(dir / "scalars" / "dreamsim_d0.txt", serialize_scalar_series(d0));

  write_file(dir / "vp_probs.txt",
             serialize_vp_probs({{"Perfect", 0.2}, {"Good", 0.4}, {"Fair", 0.25}, {"Poor", 0.1}, {"Bad", 0.05}}));
}

}  // namespace

Mode mode_from_string(const std::string& s) {
  if (s == "perfect") return Mode::perfect;
  if (s == "reversed_rotation" || s == "reversed") return Mode::reversed_rotation;
  if (s == "static") return Mode::static_pose;
  throw ConfigError("unknown synth mode '" + s + "' (perfect, reversed_rotation, static)");
}

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::perfect: return "perfect";
    case Mode::reversed_rotation: return "reversed_rotation";
    case Mode::static_pose: return "static";
  }
  return "";
}

PoseTrack synth_poses(const CaseManifest& c, const SynthOptions& opt) {
  if (opt.frames_per_turn < 2) throw ConfigError("frames_per_turn must be at least 2");
  PoseTrack out;
  const int n = opt.frames_per_turn;
  Pose start;
  int frame = 0;
  for (const auto& t : c.turns) {
    out.turns.push_back({frame, frame + n});
    std::vector<Pose> local;
    if (opt.mode == Mode::static_pose || t.kind != TurnKind::navigation) {
      local.assign(n, Pose{});
    } else {
      local = turn_motion(t.action, c.perspective, n, opt);
    }
    // Each turn starts from the pose the previous one ended on.
    for (int j = 0; j < n; ++j) out.track.push_back({frame + j, start * local[j]});
    start = out.track.back().pose;
    frame += n;
  }
  if (opt.sigma_t > 0 || opt.sigma_r > 0) {
    // One fixed draw per frame, scaled by sigma, so runs at different noise
    // levels share their random numbers.
    Normal g(case_seed(opt.seed, c.case_id, "pose-noise"));
    for (auto& sp : out.track) {
      const Vec3 nt(g(), g(), g());
      const Vec3 nr(g(), g(), g());
      sp.pose.translation += opt.sigma_t * nt;
      const Vec3 w = opt.sigma_r * nr;
      if (w.norm() > 0) sp.pose.rotation = (sp.pose.rotation * about(w.normalized(), w.norm())).normalized();
    }
  }
  return out;
}

void write_bundle(const CaseManifest& c, const SynthOptions& opt, const fs::path& root) {
  const PoseTrack poses = synth_poses(c, opt);
  const fs::path dir = root / c.case_id;
  fs::create_directories(dir);
  BundleMeta meta;
  meta.fps = opt.fps;
  meta.frames = static_cast<int>(poses.track.size());
  meta.turns = poses.turns;
  write_file(dir / "meta.txt", serialize_meta(meta));
  write_file(dir / "poses.txt", serialize_pose_track(poses));
  if (opt.full) write_full(c, opt, poses, dir);
}

}  // namespace wbench::synth
