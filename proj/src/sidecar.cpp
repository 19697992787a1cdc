#include "wbench/sidecar.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "wbench/errors.hpp"

namespace fs = std::filesystem;

namespace wbench {
namespace {

constexpr char kDepthMagic[] = "WBDEPTH1";
constexpr char kEmbMagic[] = "WBEMB1";

// Per-frame roles that must cover every frame.
const std::set<std::string> kDenseScalars = {"aesthetic_raw", "imaging_raw", "hps_raw", "cut_prob",
                                             "dreamsim_d0"};

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string what) : b_(bytes), what_(std::move(what)) {}

  void expect_magic(std::string_view magic) {
    need(magic.size());
    if (b_.compare(pos_, magic.size(), magic) != 0) throw FormatError(what_ + ": bad magic");
    pos_ += magic.size();
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == b_.size(); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError(what_ + ": payload length does not match header");
  }
  const std::string& b_;
  std::string what_;
  std::size_t pos_ = 0;
};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& tok, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw FormatError(what + ": bad number '" + tok + "'");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError(what + ": bad number '" + tok + "'");
  }
}

int parse_int(const std::string& tok, const std::string& what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size() || v < 0 || v > 0x7fffffff) throw FormatError(what + ": bad index '" + tok + "'");
    return static_cast<int>(v);
  } catch (const std::logic_error&) {
    throw FormatError(what + ": bad index '" + tok + "'");
  }
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

template <class Fn>
void for_each_line(const std::string& text, Fn fn) {
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fn(line);
  }
}

void check_increasing(const std::vector<int>& frames, const std::string& what) {
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i] <= frames[i - 1]) throw FormatError(what + ": frame indices must strictly increase");
  }
}

// Frame indices must be 0..n-1 exactly.
void check_dense(const std::vector<int>& frames, int n, const std::string& what) {
  if (static_cast<int>(frames.size()) != n) {
    throw InconsistentLengthError(what + ": " + std::to_string(frames.size()) +
                                  " entries for " + std::to_string(n) + " frames");
  }
  for (int i = 0; i < n; ++i) {
    if (frames[i] != i) throw InconsistentLengthError(what + ": frame " + std::to_string(i) + " missing");
  }
}

void check_in_range(const std::vector<int>& frames, int n, const std::string& what) {
  if (!frames.empty() && frames.back() >= n) {
    throw InconsistentLengthError(what + ": frame index " + std::to_string(frames.back()) +
                                  " beyond frame count " + std::to_string(n));
  }
}

std::vector<fs::path> numbered_files(const fs::path& dir, const std::vector<std::string>& exts) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension().string();
    if (std::find(exts.begin(), exts.end(), ext) != exts.end()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void check_numbered(const std::vector<fs::path>& files, int n, const std::string& what) {
  if (static_cast<int>(files.size()) != n) {
    throw InconsistentLengthError(what + ": " + std::to_string(files.size()) + " files for " +
                                  std::to_string(n) + " frames");
  }
  for (int i = 0; i < n; ++i) {
    if (files[i].stem().string() != frame_stem(i)) {
      throw FormatError(what + ": expected " + frame_stem(i) + ", found " + files[i].filename().string());
    }
  }
}

}  // namespace

std::string frame_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", index);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

geom::Track PoseTrack::slice(const TurnRange& r) const {
  geom::Track out;
  for (const auto& p : track) {
    if (p.frame >= r.begin && p.frame < r.end) out.push_back(p);
  }
  return out;
}

const std::vector<float>* DepthSeries::find(int frame) const {
  auto it = std::lower_bound(frames.begin(), frames.end(), frame);
  if (it == frames.end() || *it != frame) return nullptr;
  return &maps[it - frames.begin()];
}

const std::vector<float>* EmbeddingSeries::find(int frame) const {
  auto it = std::lower_bound(frames.begin(), frames.end(), frame);
  if (it == frames.end() || *it != frame) return nullptr;
  return &vectors[it - frames.begin()];
}

const EmbeddingSeries* SidecarBundle::embedding(const std::string& role) const {
  auto it = embeddings.find(role);
  return it == embeddings.end() ? nullptr : &it->second;
}

const ScalarSeries* SidecarBundle::scalar(const std::string& role) const {
  auto it = scalars.find(role);
  return it == scalars.end() ? nullptr : &it->second;
}

Image SidecarBundle::frame(int i) const { return read_image(frame_files.at(i).string()); }
Image SidecarBundle::mask(int i) const { return read_image(mask_files.at(i).string()); }

std::vector<TurnRange> parse_turn_ranges(const std::string& text) {
  std::vector<TurnRange> turns;
  for (const auto& tok : split_ws(text)) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) throw FormatError("turn range '" + tok + "' needs begin:end");
    TurnRange r{parse_int(tok.substr(0, colon), "turns"), parse_int(tok.substr(colon + 1), "turns")};
    if (r.end <= r.begin) throw FormatError("turn range '" + tok + "' is empty");
    if (!turns.empty() && r.begin != turns.back().end) {
      throw FormatError("turn ranges must be contiguous");
    }
    if (turns.empty() && r.begin != 0) throw FormatError("turn ranges must start at frame 0");
    turns.push_back(r);
  }
  if (turns.empty()) throw FormatError("no turn ranges");
  return turns;
}

std::string format_turn_ranges(const std::vector<TurnRange>& turns) {
  std::string s;
  for (const auto& r : turns) {
    if (!s.empty()) s += ' ';
    s += std::to_string(r.begin) + ":" + std::to_string(r.end);
  }
  return s;
}

BundleMeta parse_meta(const std::string& text) {
  BundleMeta m;
  bool have_fps = false, have_frames = false, have_turns = false;
  for_each_line(text, [&](const std::string& line) {
    auto toks = split_ws(line);
    if (toks.empty() || toks[0][0] == '#') return;
    if (toks[0] == "fps" && toks.size() == 2) {
      m.fps = parse_double(toks[1], "meta fps");
      have_fps = m.fps > 0;
    } else if (toks[0] == "frames" && toks.size() == 2) {
      m.frames = parse_int(toks[1], "meta frames");
      have_frames = true;
    } else if (toks[0] == "turns") {
      m.turns = parse_turn_ranges(line.substr(line.find("turns") + 5));
      have_turns = true;
    } else {
      throw FormatError("meta: unknown line '" + line + "'");
    }
  });
  if (!have_fps || !have_frames || !have_turns) throw FormatError("meta: needs fps, frames and turns");
  if (m.turns.back().end != m.frames) throw FormatError("meta: turn ranges do not cover all frames");
  return m;
}

std::string serialize_meta(const BundleMeta& m) {
  return "fps " + fmt_double(m.fps) + "\nframes " + std::to_string(m.frames) + "\nturns " +
         format_turn_ranges(m.turns) + "\n";
}

PoseTrack parse_pose_track(const std::string& text) {
  PoseTrack p;
  bool have_header = false;
  for_each_line(text, [&](const std::string& line) {
    if (line.empty()) return;
    if (line[0] == '#') {
      auto toks = split_ws(line.substr(1));
      if (!toks.empty() && toks[0] == "turns") {
        p.turns = parse_turn_ranges(line.substr(line.find("turns") + 5));
        have_header = true;
      }
      return;
    }
    auto toks = split_ws(line);
    if (toks.size() != 8) throw FormatError("poses: expected 8 fields, got " + std::to_string(toks.size()));
    geom::StampedPose sp;
    sp.frame = parse_int(toks[0], "poses");
    double v[7];
    for (int i = 0; i < 7; ++i) v[i] = parse_double(toks[i + 1], "poses");
    sp.pose.rotation = geom::Quat(v[0], v[1], v[2], v[3]);
    sp.pose.translation = geom::Vec3(v[4], v[5], v[6]);
    const double norm = sp.pose.rotation.norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6) {
      throw FormatError("poses: frame " + toks[0] + " quaternion is not unit");
    }
    if (!sp.pose.translation.allFinite()) throw FormatError("poses: non-finite translation");
    if (!p.track.empty() && sp.frame <= p.track.back().frame) {
      throw FormatError("poses: frame indices must strictly increase");
    }
    p.track.push_back(sp);
  });
  if (!have_header) throw FormatError("poses: missing '# turns' header");
  return p;
}

std::string serialize_pose_track(const PoseTrack& p) {
  std::string s = "# turns " + format_turn_ranges(p.turns) + "\n";
  for (const auto& sp : p.track) {
    const auto& q = sp.pose.rotation;
    const auto& t = sp.pose.translation;
    s += std::to_string(sp.frame);
    for (double v : {q.w(), q.x(), q.y(), q.z(), t.x(), t.y(), t.z()}) s += ' ' + fmt_double(v);
    s += '\n';
  }
  return s;
}

DepthSeries parse_depth(const std::string& bytes) {
  ByteReader r(bytes, "depth");
  r.expect_magic(std::string_view(kDepthMagic, 8));
  DepthSeries d;
  d.width = static_cast<int>(r.u32());
  d.height = static_cast<int>(r.u32());
  d.fx = r.f32();
  d.fy = r.f32();
  d.cx = r.f32();
  d.cy = r.f32();
  if (d.width <= 0 || d.height <= 0) throw FormatError("depth: empty map size");
  if (!(d.fx > 0) || !(d.fy > 0)) throw FormatError("depth: focal lengths must be positive");
  const std::size_t px = static_cast<std::size_t>(d.width) * d.height;
  const std::size_t rec = 4 + 4 * px;
  if (r.remaining() % rec != 0) throw FormatError("depth: payload length does not match header");
  while (!r.done()) {
    d.frames.push_back(static_cast<int>(r.u32()));
    std::vector<float> m(px);
    for (auto& v : m) v = r.f32();
    d.maps.push_back(std::move(m));
  }
  check_increasing(d.frames, "depth");
  return d;
}

std::string serialize_depth(const DepthSeries& d) {
  std::string out(kDepthMagic, 8);
  put_u32(out, d.width);
  put_u32(out, d.height);
  for (float f : {d.fx, d.fy, d.cx, d.cy}) put_f32(out, f);
  for (std::size_t i = 0; i < d.frames.size(); ++i) {
    put_u32(out, d.frames[i]);
    for (float v : d.maps[i]) put_f32(out, v);
  }
  return out;
}

EmbeddingSeries parse_embeddings(const std::string& bytes) {
  ByteReader r(bytes, "embeddings");
  r.expect_magic(std::string_view(kEmbMagic, 6));
  EmbeddingSeries e;
  e.dim = static_cast<int>(r.u32());
  if (e.dim <= 0) throw FormatError("embeddings: zero dimension");
  const std::size_t rec = 4 + 4 * static_cast<std::size_t>(e.dim);
  if (r.remaining() % rec != 0) throw FormatError("embeddings: payload length does not match header");
  while (!r.done()) {
    e.frames.push_back(static_cast<int>(r.u32()));
    std::vector<float> v(e.dim);
    for (auto& x : v) x = r.f32();
    e.vectors.push_back(std::move(v));
  }
  check_increasing(e.frames, "embeddings");
  return e;
}

std::string serialize_embeddings(const EmbeddingSeries& e) {
  std::string out(kEmbMagic, 6);
  put_u32(out, e.dim);
  for (std::size_t i = 0; i < e.frames.size(); ++i) {
    put_u32(out, e.frames[i]);
    for (float v : e.vectors[i]) put_f32(out, v);
  }
  return out;
}

ScalarSeries parse_scalar_series(const std::string& text) {
  ScalarSeries s;
  for_each_line(text, [&](const std::string& line) {
    auto toks = split_ws(line);
    if (toks.empty() || toks[0][0] == '#') return;
    if (toks.size() != 2) throw FormatError("scalar series: expected 'frame value', got '" + line + "'");
    s.frames.push_back(parse_int(toks[0], "scalar series"));
    const double v = parse_double(toks[1], "scalar series");
    if (!std::isfinite(v)) throw FormatError("scalar series: non-finite value");
    s.values.push_back(v);
  });
  check_increasing(s.frames, "scalar series");
  return s;
}

std::string serialize_scalar_series(const ScalarSeries& s) {
  std::string out;
  for (std::size_t i = 0; i < s.frames.size(); ++i) {
    out += std::to_string(s.frames[i]) + ' ' + fmt_double(s.values[i]) + '\n';
  }
  return out;
}

std::map<std::string, double> parse_vp_probs(const std::string& text) {
  std::map<std::string, double> probs;
  for_each_line(text, [&](const std::string& line) {
    auto toks = split_ws(line);
    if (toks.empty() || toks[0][0] == '#') return;
    if (toks.size() != 2) throw FormatError("vp_probs: expected 'token probability'");
    if (std::find_if(std::begin(kRatingTokens), std::end(kRatingTokens),
                     [&](const char* t) { return toks[0] == t; }) == std::end(kRatingTokens)) {
      throw FormatError("vp_probs: unknown rating token '" + toks[0] + "'");
    }
    const double p = parse_double(toks[1], "vp_probs");
    if (!std::isfinite(p) || p < 0) throw FormatError("vp_probs: probabilities must be >= 0");
    if (!probs.emplace(toks[0], p).second) throw FormatError("vp_probs: repeated token");
  });
  return probs;
}

std::string serialize_vp_probs(const std::map<std::string, double>& probs) {
  std::string out;
  for (const char* t : kRatingTokens) {
    auto it = probs.find(t);
    if (it != probs.end()) out += std::string(t) + ' ' + fmt_double(it->second) + '\n';
  }
  return out;
}

SidecarInspection inspect_sidecars(const std::string& case_id, const fs::path& artifacts_root) {
  SidecarInspection out;
  auto& b = out.bundle;
  b.case_id = case_id;
  b.dir = artifacts_root / case_id;
  if (!fs::is_directory(b.dir)) {
    out.issues.push_back({"bundle", "format", "no artifact directory " + b.dir.string()});
    return out;
  }

  auto attempt = [&](const std::string& role, auto&& fn) {
    try {
      fn();
      return true;
    } catch (const InconsistentLengthError& e) {
      out.issues.push_back({role, "length", e.what()});
    } catch (const Error& e) {
      out.issues.push_back({role, "format", e.what()});
    }
    return false;
  };

  const fs::path meta_path = b.dir / "meta.txt";
  if (!fs::exists(meta_path)) {
    out.issues.push_back({"meta", "format", "meta.txt missing"});
    return out;
  }
  if (!attempt("meta", [&] {
        const auto m = parse_meta(read_file(meta_path));
        b.fps = m.fps;
        b.frame_count = m.frames;
        b.turns = m.turns;
      })) {
    return out;
  }
  const int n = b.frame_count;

  if (fs::is_directory(b.dir / "frames")) {
    attempt("frames", [&] {
      auto files = numbered_files(b.dir / "frames", {".ppm", ".png"});
      check_numbered(files, n, "frames");
      b.frame_files = std::move(files);
    });
  } else {
    b.missing.push_back("frames");
  }

  if (fs::is_directory(b.dir / "masks")) {
    attempt("masks", [&] {
      auto files = numbered_files(b.dir / "masks", {".pgm", ".png"});
      check_numbered(files, n, "masks");
      b.mask_files = std::move(files);
    });
  } else {
    b.missing.push_back("masks");
  }

  if (fs::exists(b.dir / "poses.txt")) {
    attempt("poses", [&] {
      auto p = parse_pose_track(read_file(b.dir / "poses.txt"));
      std::vector<int> frames;
      for (const auto& sp : p.track) frames.push_back(sp.frame);
      check_dense(frames, n, "poses");
      if (p.turns != b.turns) throw FormatError("poses: turn header disagrees with meta.txt");
      b.poses = std::move(p);
    });
  } else {
    b.missing.push_back("poses");
  }

  if (fs::exists(b.dir / "depth.bin")) {
    attempt("depth", [&] {
      auto d = parse_depth(read_file(b.dir / "depth.bin"));
      check_in_range(d.frames, n, "depth");
      b.depth = std::move(d);
    });
  } else {
    b.missing.push_back("depth");
  }

  for (const auto& role : kEmbeddingRoles) {
    const auto path = b.dir / "embeddings" / (role + ".emb");
    if (!fs::exists(path)) {
      b.missing.push_back("embeddings/" + role);
      continue;
    }
    attempt("embeddings/" + role, [&] {
      auto e = parse_embeddings(read_file(path));
      check_in_range(e.frames, n, role);
      b.embeddings.emplace(role, std::move(e));
    });
  }

  for (const auto& role : kScalarRoles) {
    const auto path = b.dir / "scalars" / (role + ".txt");
    if (!fs::exists(path)) {
      b.missing.push_back("scalars/" + role);
      continue;
    }
    attempt("scalars/" + role, [&] {
      auto s = parse_scalar_series(read_file(path));
      if (kDenseScalars.count(role)) {
        check_dense(s.frames, n, role);
      } else {
        check_in_range(s.frames, n, role);
      }
      b.scalars.emplace(role, std::move(s));
    });
  }

  if (fs::exists(b.dir / "vp_probs.txt")) {
    attempt("vp_probs", [&] { b.vp_probs = parse_vp_probs(read_file(b.dir / "vp_probs.txt")); });
  } else {
    b.missing.push_back("vp_probs");
  }
  return out;
}

SidecarBundle load_sidecars(const std::string& case_id, const fs::path& artifacts_root) {
  auto ins = inspect_sidecars(case_id, artifacts_root);
  if (!ins.issues.empty()) {
    const auto& first = ins.issues.front();
    const std::string msg = case_id + ": " + first.message;
    if (first.kind == "length") throw InconsistentLengthError(msg);
    throw FormatError(msg);
  }
  return std::move(ins.bundle);
}

}  // namespace wbench
