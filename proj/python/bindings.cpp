#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "wbench/commands.hpp"
#include "wbench/config.hpp"
#include "wbench/consistency.hpp"
#include "wbench/errors.hpp"
#include "wbench/geom.hpp"
#include "wbench/manifest.hpp"
#include "wbench/navscore.hpp"
#include "wbench/quality.hpp"
#include "wbench/report.hpp"
#include "wbench/sidecar.hpp"
#include "wbench/synth.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace wbench;

namespace {

using PoseRow = std::array<double, 7>;  // qw qx qy qz tx ty tz

geom::Track track_from_rows(const std::vector<int>& frames, const std::vector<PoseRow>& rows) {
  if (frames.size() != rows.size()) throw std::invalid_argument("frames and poses differ in length");
  geom::Track t;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    geom::Pose p;
    p.rotation = geom::Quat(r[0], r[1], r[2], r[3]).normalized();
    p.translation = geom::Vec3(r[4], r[5], r[6]);
    t.push_back({frames[i], p});
  }
  return t;
}

std::vector<PoseRow> rows_from_track(const geom::Track& t) {
  std::vector<PoseRow> out;
  for (const auto& sp : t) {
    const auto& q = sp.pose.rotation;
    const auto& x = sp.pose.translation;
    out.push_back({q.w(), q.x(), q.y(), q.z(), x.x(), x.y(), x.z()});
  }
  return out;
}

std::vector<TurnRange> ranges(const std::vector<std::pair<int, int>>& turns) {
  std::vector<TurnRange> out;
  for (auto [b, e] : turns) out.push_back({b, e});
  return out;
}

std::vector<std::pair<int, int>> pairs(const std::vector<TurnRange>& turns) {
  std::vector<std::pair<int, int>> out;
  for (const auto& r : turns) out.emplace_back(r.begin, r.end);
  return out;
}

MetricConfig config_from(const std::string& overrides) {
  return config_with_overrides(overrides.empty() ? nlohmann::json::object() : nlohmann::json::parse(overrides));
}

const CaseManifest& find_case(const Benchmark& b, const std::string& id) {
  for (const auto& c : b) {
    if (c.case_id == id) return c;
  }
  throw ConfigError("no case '" + id + "' in manifest");
}

py::dict nav_dict(const nav::NavBreakdown& b) {
  py::list turns;
  for (const auto& t : b.turns) {
    py::dict d;
    d["turn"] = t.turn;
    d["action"] = t.action;
    d["L_pred"] = t.L_pred;
    d["Theta_pred"] = t.Theta_pred;
    d["nate_t"] = t.nate_t;
    d["nate_r"] = t.nate_r;
    d["rpe_t"] = t.rpe_t;
    d["rpe_r"] = t.rpe_r;
    d["fallback_length"] = t.gt.fallback_length;
    d["fallback_rotation"] = t.gt.fallback_rotation;
    d["score"] = t.score;
    turns.append(d);
  }
  py::dict d;
  d["turns"] = turns;
  d["nate_t"] = b.nate_t;
  d["nate_r"] = b.nate_r;
  d["cnate_t"] = b.cnate_t;
  d["cnate_r"] = b.cnate_r;
  d["pairs"] = b.pairs;
  d["acc"] = b.acc;
  d["cons"] = b.cons;
  d["rpe_t"] = b.rpe_t;
  d["rpe_r"] = b.rpe_r;
  d["nav_score"] = b.nav_score;
  return d;
}

py::bytes depth_bytes(const py::array_t<float, py::array::c_style | py::array::forcecast>& maps,
                      const std::vector<int>& frames, std::array<float, 4> intr) {
  if (maps.ndim() != 3) throw std::invalid_argument("depth maps must be (frames, height, width)");
  if (static_cast<std::size_t>(maps.shape(0)) != frames.size()) {
    throw std::invalid_argument("depth maps and frame indices differ in length");
  }
  DepthSeries d;
  d.height = static_cast<int>(maps.shape(1));
  d.width = static_cast<int>(maps.shape(2));
  d.fx = intr[0];
  d.fy = intr[1];
  d.cx = intr[2];
  d.cy = intr[3];
  d.frames = frames;
  const std::size_t px = static_cast<std::size_t>(d.width) * d.height;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const float* p = maps.data() + i * px;
    d.maps.emplace_back(p, p + px);
  }
  return py::bytes(serialize_depth(d));
}

py::dict depth_dict(const std::string& bytes) {
  const auto d = parse_depth(bytes);
  py::array_t<float> maps({static_cast<py::ssize_t>(d.frames.size()), static_cast<py::ssize_t>(d.height),
                           static_cast<py::ssize_t>(d.width)});
  float* out = maps.mutable_data();
  for (const auto& m : d.maps) out = std::copy(m.begin(), m.end(), out);
  py::dict r;
  r["frames"] = d.frames;
  r["maps"] = maps;
  r["intrinsics"] = std::array<float, 4>{d.fx, d.fy, d.cx, d.cy};
  return r;
}

py::bytes embedding_bytes(const py::array_t<float, py::array::c_style | py::array::forcecast>& vecs,
                          const std::vector<int>& frames) {
  if (vecs.ndim() != 2) throw std::invalid_argument("embeddings must be (frames, dim)");
  if (static_cast<std::size_t>(vecs.shape(0)) != frames.size()) {
    throw std::invalid_argument("embeddings and frame indices differ in length");
  }
  EmbeddingSeries e;
  e.dim = static_cast<int>(vecs.shape(1));
  e.frames = frames;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const float* p = vecs.data() + i * e.dim;
    e.vectors.emplace_back(p, p + e.dim);
  }
  return py::bytes(serialize_embeddings(e));
}

py::dict embedding_dict(const std::string& bytes) {
  const auto e = parse_embeddings(bytes);
  py::array_t<float> v({static_cast<py::ssize_t>(e.frames.size()), static_cast<py::ssize_t>(e.dim)});
  float* out = v.mutable_data();
  for (const auto& x : e.vectors) out = std::copy(x.begin(), x.end(), out);
  py::dict r;
  r["frames"] = e.frames;
  r["vectors"] = v;
  return r;
}

std::string json_text(const nlohmann::json& j) { return j.dump(); }

Split split_from(const std::string& s) {
  const auto v = enum_from_string<Split>(s);
  if (!v) throw ConfigError("unknown track '" + s + "' (expected nav or full)");
  return *v;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "World-model evaluation engine";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<InconsistentLengthError>(m, "InconsistentLengthError", base.ptr());
  py::register_exception<DegenerateError>(m, "DegenerateError", base.ptr());
  py::register_exception<MissingPoseError>(m, "MissingPoseError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());

  // manifest
  m.def("case_ids", [](const std::string& path, const std::string& split) {
    auto b = load_manifest(path);
    if (!split.empty()) b = split_track(b, split_from(split));
    std::vector<std::string> ids;
    for (const auto& c : b) ids.push_back(c.case_id);
    return ids;
  }, py::arg("manifest"), py::arg("split") = "");

  // geometry and scores
  m.def("arc_length_resample", [](const std::vector<PoseRow>& poses, int K) {
    std::vector<int> frames(poses.size());
    for (std::size_t i = 0; i < frames.size(); ++i) frames[i] = static_cast<int>(i);
    return rows_from_track(geom::arc_length_resample(track_from_rows(frames, poses), K));
  }, py::arg("poses"), py::arg("K") = 20);

  m.def("nav_score", [](const std::string& manifest, const std::string& case_id, const std::string& poses_text,
                        const std::string& overrides) {
    const auto b = load_manifest(manifest);
    return nav_dict(nav::nav_score(find_case(b, case_id), parse_pose_track(poses_text), config_from(overrides).nav));
  }, py::arg("manifest"), py::arg("case_id"), py::arg("poses_text"), py::arg("overrides") = "");

  m.def("gate_factor", &consistency::gate_factor, py::arg("s_min"), py::arg("tau") = 0.15);
  m.def("spatial_scores", [](const std::vector<double>& d0, int return_idx, const std::string& overrides) {
    const auto s = consistency::spatial_scores(d0, return_idx, config_from(overrides).consistency);
    py::dict d;
    d["spatial"] = s.spatial;
    d["gated"] = s.gated;
    d["s_ret"] = s.s_ret;
    d["s_min"] = s.s_min;
    return d;
  }, py::arg("d0"), py::arg("return_idx"), py::arg("overrides") = "");
  m.def("segment_continuity", [](const std::vector<double>& probs, const std::string& overrides) {
    const auto r = consistency::segment_continuity(probs, config_from(overrides).consistency);
    return py::make_tuple(r.score, r.cuts);
  }, py::arg("cut_probs"), py::arg("overrides") = "");
  m.def("psnr_db", &consistency::psnr_db, py::arg("mse"), py::arg("cap") = 100.0);
  m.def("hps_norm", [](double raw) { return quality::hps_norm(raw, QualityConfig{}); });
  m.def("spearman", &report::spearman);
  m.def("pearson", &report::pearson);

  // sidecar formats
  m.def("serialize_poses", [](const std::vector<int>& frames, const std::vector<PoseRow>& poses,
                              const std::vector<std::pair<int, int>>& turns) {
    return serialize_pose_track({ranges(turns), track_from_rows(frames, poses)});
  }, py::arg("frames"), py::arg("poses"), py::arg("turns"));
  m.def("parse_poses", [](const std::string& text) {
    const auto p = parse_pose_track(text);
    std::vector<int> frames;
    for (const auto& sp : p.track) frames.push_back(sp.frame);
    py::dict d;
    d["frames"] = frames;
    d["poses"] = rows_from_track(p.track);
    d["turns"] = pairs(p.turns);
    return d;
  });
  m.def("serialize_depth", &depth_bytes, py::arg("maps"), py::arg("frames"), py::arg("intrinsics"));
  m.def("parse_depth", [](const py::bytes& b) { return depth_dict(b); });
  m.def("serialize_embeddings", &embedding_bytes, py::arg("vectors"), py::arg("frames"));
  m.def("parse_embeddings", [](const py::bytes& b) { return embedding_dict(b); });
  m.def("serialize_scalars", [](const std::vector<int>& frames, const std::vector<double>& values) {
    return serialize_scalar_series({frames, values});
  }, py::arg("frames"), py::arg("values"));
  m.def("parse_scalars", [](const std::string& text) {
    const auto s = parse_scalar_series(text);
    return py::make_tuple(s.frames, s.values);
  });
  m.def("serialize_vp_probs", &serialize_vp_probs);
  m.def("parse_vp_probs", &parse_vp_probs);
  m.def("serialize_meta", [](double fps, int frames, const std::vector<std::pair<int, int>>& turns) {
    return serialize_meta({fps, frames, ranges(turns)});
  }, py::arg("fps"), py::arg("frames"), py::arg("turns"));
  m.def("frame_stem", &frame_stem);
  m.def("inspect_sidecars", [](const std::string& case_id, const fs::path& root) {
    const auto ins = inspect_sidecars(case_id, root);
    py::list issues;
    for (const auto& i : ins.issues) {
      py::dict d;
      d["role"] = i.role;
      d["kind"] = i.kind;
      d["message"] = i.message;
      issues.append(d);
    }
    py::dict d;
    d["frame_count"] = ins.bundle.frame_count;
    d["missing"] = ins.bundle.missing;
    d["issues"] = issues;
    return d;
  }, py::arg("case_id"), py::arg("artifacts_root"));

  // commands; the JSON-bearing results come back as text for the Python layer
  m.def("synth", [](const fs::path& manifest, const fs::path& artifacts, const std::string& mode, double sigma_t,
                    double sigma_r, std::uint64_t seed, bool full) {
    synth::SynthOptions o;
    o.mode = synth::mode_from_string(mode);
    o.sigma_t = sigma_t;
    o.sigma_r = sigma_r;
    o.seed = seed;
    o.full = full;
    std::ostringstream log;
    const int code = cmd_synth(manifest, artifacts, o, log);
    return py::make_tuple(code, log.str());
  }, py::arg("manifest"), py::arg("artifacts"), py::arg("mode") = "perfect", py::arg("sigma_t") = 0.0,
     py::arg("sigma_r") = 0.0, py::arg("seed") = 0, py::arg("full") = false);

  m.def("validate", [](const fs::path& manifest, const fs::path& artifacts) {
    std::ostringstream out;
    nlohmann::json summary;
    const int code = cmd_validate(manifest, artifacts, out, &summary);
    return py::make_tuple(code, out.str(), json_text(summary));
  }, py::arg("manifest"), py::arg("artifacts"));

  m.def("run", [](const fs::path& manifest, const fs::path& artifacts, const fs::path& out, const std::string& track,
                  const std::string& metrics, const std::string& judge, int workers, const std::string& model_id,
                  const std::string& overrides) {
    RunConfig rc;
    rc.manifest = manifest;
    rc.artifacts = artifacts;
    rc.out = out;
    rc.track = split_from(track);
    rc.metrics = metrics;
    rc.judge = judge_mode_from_string(judge);
    rc.workers = workers;
    rc.model_id = model_id;
    if (!overrides.empty()) rc.overrides = nlohmann::json::parse(overrides);
    std::ostringstream log;
    int code;
    {
      py::gil_scoped_release release;
      code = cmd_run(rc, log);
    }
    return py::make_tuple(code, log.str());
  }, py::arg("manifest"), py::arg("artifacts"), py::arg("out"), py::arg("track") = "full",
     py::arg("metrics") = "", py::arg("judge") = "stub", py::arg("workers") = 1, py::arg("model_id") = "model",
     py::arg("overrides") = "");

  m.def("report", [](const std::vector<fs::path>& runs, const std::vector<std::string>& formats, const fs::path& out,
                     const std::optional<fs::path>& votes) {
    std::set<report::Format> fmts;
    for (const auto& f : formats) fmts.insert(report::format_from_string(f));
    std::ostringstream log;
    const int code = cmd_report(runs, fmts, out, votes, log);
    return py::make_tuple(code, log.str());
  }, py::arg("runs"), py::arg("formats"), py::arg("out"), py::arg("votes") = std::nullopt);

  m.def("scorecards", [](const fs::path& run_dir) {
    std::vector<std::string> out;
    for (const auto& c : load_scorecards(run_dir)) out.push_back(dump_scorecard(c));
    return out;
  });
}
