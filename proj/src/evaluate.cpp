#include "wbench/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "wbench/consistency.hpp"
#include "wbench/digest.hpp"
#include "wbench/errors.hpp"
#include "wbench/navscore.hpp"
#include "wbench/quality.hpp"

namespace wbench {
namespace {

using judge::Attachment;
using judge::JudgeAnswer;
using judge::ParseStatus;

struct JudgeFailed : Error {
  using Error::Error;
};

class CaseEvaluator {
 public:
  CaseEvaluator(const CaseManifest& c, const SidecarInspection& s, const EvalOptions& opt)
      : c_(c), b_(s.bundle), opt_(opt), cfg_(*opt.cfg) {
    card_.case_id = c.case_id;
    card_.model_id = opt.model_id;
    card_.perspective = c.perspective;
    card_.scene_category = c.scene_category;
    card_.subject_category = c.subject_category;
    card_.in_nav_split = c.in_nav_split;
    card_.config_digest = config_digest(cfg_);
    for (const auto& t : c.turns) card_.turn_kinds.push_back(t.kind);
    card_.validity.issues = s.issues;
    for (const auto& i : s.issues) invalid_.insert(i.role);
    card_.validity.missing_inputs = b_.missing;
    std::sort(card_.validity.missing_inputs.begin(), card_.validity.missing_inputs.end());
    if (!opt.transcript_dir.empty()) {
      const auto path = opt.transcript_dir / (c.case_id + ".jsonl");
      std::filesystem::create_directories(opt.transcript_dir);
      std::filesystem::remove(path);
      transcript_ = std::make_unique<judge::Transcript>(path);
    }
  }

  ScoreCard run() {
    if (!b_.turns.empty() && b_.turns.size() != c_.turns.size()) {
      card_.validity.issues.push_back(
          {"meta", "length",
           "bundle declares " + std::to_string(b_.turns.size()) + " turns, manifest has " +
               std::to_string(c_.turns.size())});
      invalid_.insert("meta");
    }
    for (Metric m : all_metrics()) {
      if (!metric_applicable(c_, m)) {
        card_.not_applicable.push_back(m);
        continue;
      }
      MetricResult r;
      if (!opt_.enabled.empty() && !opt_.enabled.count(m)) {
        r.reason = "disabled";
      } else if (metric_uses_judge(m) && !opt_.client) {
        r.reason = "disabled";
      } else if (auto why = unavailable(m)) {
        r.reason = *why;
      } else {
        try {
          r = compute(m);
        } catch (const TransportError& e) {
          card_.validity.transport_failure = true;
          r = {std::nullopt, "judge_failed", {{"error", e.what()}}};
        } catch (const JudgeFailed& e) {
          r = {std::nullopt, "judge_failed", {{"error", e.what()}}};
        } catch (const DegenerateError& e) {
          r = {std::nullopt, "degenerate", {{"error", e.what()}}};
        } catch (const MissingPoseError& e) {
          r = {std::nullopt, "missing:poses", {{"error", e.what()}}};
        } catch (const MissingFieldError& e) {
          r = {std::nullopt, "missing_field", {{"error", e.what()}}};
        } catch (const Error& e) {
          r = {std::nullopt, "invalid", {{"error", e.what()}}};
        }
      }
      if (!r.value && r.reason.empty()) r.reason = "insufficient_data";
      if (!r.value) card_.validity.excluded[m] = r.reason;
      card_.metrics[m] = std::move(r);
    }
    return std::move(card_);
  }

 private:
  bool present(const std::string& role) const {
    if (invalid_.count(role) || broken()) return false;
    if (role == "frames") return b_.has_frames();
    if (role == "masks") return b_.has_masks();
    if (role == "poses") return b_.poses.has_value();
    if (role == "depth") return b_.depth.has_value();
    if (role == "vp_probs") return b_.vp_probs.has_value();
    if (b_.embedding(role)) return true;
    return b_.scalar(role) != nullptr;
  }

  bool broken() const { return invalid_.count("meta") || invalid_.count("bundle"); }

  std::optional<std::string> unavailable(Metric m) const {
    for (const auto& role : metric_inputs(m)) {
      if (invalid_.count(role)) return "invalid:" + role;
      if (invalid_.count("bundle")) return "missing:bundle";
      if (invalid_.count("meta")) return "invalid:meta";
      if (!present(role)) return "missing:" + role;
    }
    return std::nullopt;
  }

  static MetricResult value(std::optional<double> v, nlohmann::json detail = nullptr) {
    MetricResult r;
    r.value = v;
    r.detail = std::move(detail);
    return r;
  }

  std::vector<double> scalar_values(const std::string& role) const { return b_.scalar(role)->values; }

  const std::vector<consistency::MaskStats>& masks() {
    if (!mask_stats_) {
      std::vector<consistency::MaskStats> v;
      v.reserve(b_.mask_files.size());
      for (int i = 0; i < static_cast<int>(b_.mask_files.size()); ++i) v.push_back(consistency::mask_stats(b_.mask(i)));
      mask_stats_ = std::move(v);
    }
    return *mask_stats_;
  }

  std::vector<Attachment> attachments(const TurnRange& range, double target_fps) const {
    std::vector<Attachment> out;
    const double fps = b_.fps > 0 ? b_.fps : cfg_.judge.default_source_fps;
    for (int f : judge::sample_frames(range, fps, target_fps)) {
      out.push_back({f, b_.frame_files.at(f).string()});
    }
    return out;
  }

  TurnRange turn_range(int turn) const {
    if (turn < 0 || turn >= static_cast<int>(b_.turns.size())) {
      throw FormatError("no frame range for turn " + std::to_string(turn));
    }
    return b_.turns[turn];
  }

  JudgeAnswer ask(const judge::PromptBundle& bundle, int turn) {
    judge::RunContext ctx;
    ctx.client = opt_.client;
    ctx.cfg = &cfg_.judge;
    ctx.transcript = transcript_.get();
    ctx.sleep = opt_.sleep;
    ctx.case_id = c_.case_id;
    ctx.turn = turn;
    return judge::run_judge(bundle, ctx);
  }

  MetricResult adherence(Metric m) {
    const bool scene = m == Metric::scene_adherence;
    const auto frames = attachments({0, b_.frame_count}, cfg_.judge.setting_fps);
    const auto bundle = judge::render_prompt(scene ? "scene_adherence" : "subject_adherence", c_, -1, frames);
    const auto a = ask(bundle, -1);
    if (a.status != ParseStatus::ok) throw JudgeFailed(a.error);
    const double v = scene ? judge::score_scene_adherence(a.adherence->grade, a.adherence->flag)
                           : judge::score_subject_adherence(a.adherence->grade, a.adherence->flag);
    return value(v, {{scene ? "maintenance" : "appearance", a.adherence->grade},
                     {scene ? "offscreen" : "action", a.adherence->flag}});
  }

  MetricResult interaction(Metric m, TurnKind kind, const char* tmpl) {
    std::vector<int> grades;
    for (const auto& t : c_.turns) {
      if (t.kind != kind) continue;
      TurnScore ts{t.index, kind, m, std::nullopt, ""};
      const auto bundle = judge::render_prompt(tmpl, c_, t.index,
                                               attachments(turn_range(t.index), cfg_.judge.interaction_fps),
                                               std::nullopt, cfg_.judge.persp_group_frames);
      const auto a = ask(bundle, t.index);
      if (a.status == ParseStatus::ok) {
        const int g = kind == TurnKind::perspective_switching ? judge::score_persp_switch(a.verdicts)
                                                              : judge::score_event_or_action(a.verdicts);
        ts.score = judge::score_interaction_case(kind, {g});
        grades.push_back(g);
      } else {
        ts.reason = "judge_failed";
      }
      card_.turns.push_back(ts);
    }
    if (grades.empty()) throw JudgeFailed("every turn failed to parse");
    return value(judge::score_interaction_case(kind, grades), {{"turns_scored", grades.size()}});
  }

  MetricResult causal() {
    std::vector<double> per_turn;
    for (const auto& t : c_.turns) {
      TurnScore ts{t.index, t.kind, Metric::causal_fidelity, std::nullopt, ""};
      const auto frames = attachments(turn_range(t.index), cfg_.judge.interaction_fps);
      const auto a1 = ask(judge::render_prompt("causal_track1", c_, t.index, frames), t.index);
      std::vector<int> track2;
      bool ok = a1.status == ParseStatus::ok;
      for (Track2Dim d : c_.track2_dims) {
        if (!ok) break;
        const auto a2 = ask(judge::render_prompt("causal_track2", c_, t.index, frames, d), t.index);
        if (a2.status != ParseStatus::ok) {
          ok = false;
          break;
        }
        track2.push_back(*a2.grade);
      }
      if (ok) {
        const double s = judge::causal_turn_score(*a1.grade, track2);
        per_turn.push_back(s);
        ts.score = s * 100.0 / 3.0;
      } else {
        ts.reason = "judge_failed";
      }
      card_.turns.push_back(ts);
    }
    if (per_turn.empty()) throw JudgeFailed("every turn failed to parse");
    return value(judge::score_causal_fidelity(per_turn), {{"turns_scored", per_turn.size()}});
  }

  MetricResult spatial(bool gated) {
    if (!spatial_) {
      const auto& poses = *b_.poses;
      const int ret = consistency::find_return_frame(poses.track, b_.turns.back());
      spatial_ = consistency::spatial_scores(scalar_values("dreamsim_d0"), ret, cfg_.consistency);
    }
    const auto& s = *spatial_;
    return value(gated ? s.gated : s.spatial,
                 {{"return_frame", s.return_frame}, {"s_ret", s.s_ret}, {"s_min", s.s_min}});
  }

  MetricResult compute(Metric m) {
    const auto& cc = cfg_.consistency;
    switch (m) {
      case Metric::aesthetic_quality:
        return value(quality::aesthetic_score(scalar_values("aesthetic_raw")));
      case Metric::imaging_quality:
        return value(quality::imaging_score(scalar_values("imaging_raw")));
      case Metric::temporal_flickering: {
        std::vector<double> mae;
        Image prev = b_.frame(0);
        for (int i = 1; i < static_cast<int>(b_.frame_files.size()); ++i) {
          Image cur = b_.frame(i);
          mae.push_back(quality::frame_mae(prev, cur));
          prev = std::move(cur);
        }
        return value(quality::flicker_from_mae(mae));
      }
      case Metric::dynamic_degree: {
        const auto v = scalar_values("flow_top5_mean");
        return value(quality::dynamic_degree(v, cfg_.quality),
                     {{"pairs", v.size()}, {"n_min", quality::dynamic_nmin(static_cast<int>(v.size()), cfg_.quality)}});
      }
      case Metric::motion_smoothness:
        return value(quality::motion_smoothness(scalar_values("smoothness_pair_mae")));
      case Metric::hps_norm: {
        const auto v = scalar_values("hps_raw");
        if (v.empty()) return value(std::nullopt);
        double mean = 0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        return value(quality::hps_norm(mean, cfg_.quality), {{"raw_mean", mean}});
      }
      case Metric::scene_adherence:
      case Metric::subject_adherence:
        return adherence(m);
      case Metric::navigation: {
        const auto nb = nav::nav_score(c_, *b_.poses, cfg_.nav);
        nlohmann::json turns = nlohmann::json::array();
        for (const auto& t : nb.turns) {
          card_.turns.push_back({t.turn, TurnKind::navigation, Metric::navigation, t.score, ""});
          turns.push_back({{"turn", t.turn},
                           {"action", t.action},
                           {"L_pred", t.L_pred},
                           {"Theta_pred", t.Theta_pred},
                           {"nate_t", t.nate_t},
                           {"nate_r", t.nate_r},
                           {"rpe_t", t.rpe_t},
                           {"rpe_r", t.rpe_r},
                           {"fallback_length", t.gt.fallback_length},
                           {"fallback_rotation", t.gt.fallback_rotation}});
        }
        return value(nb.nav_score, {{"acc", nb.acc},
                                    {"nate_t", nb.nate_t},
                                    {"nate_r", nb.nate_r},
                                    {"cons", nb.cons},
                                    {"cnate_t", nb.cnate_t},
                                    {"cnate_r", nb.cnate_r},
                                    {"pairs", nb.pairs},
                                    {"rpe_t", nb.rpe_t},
                                    {"rpe_r", nb.rpe_r},
                                    {"turns", turns}});
      }
      case Metric::event_editing:
        return interaction(m, TurnKind::event_editing, "event_editing");
      case Metric::subject_action:
        return interaction(m, TurnKind::subject_action, "subject_action");
      case Metric::perspective_switching:
        return interaction(m, TurnKind::perspective_switching, "perspective_switching");
      case Metric::spatial_consistency:
        return spatial(false);
      case Metric::gated_spatial_consistency:
        return spatial(true);
      case Metric::segment_continuity: {
        const auto r = consistency::segment_continuity(scalar_values("cut_prob"), cc);
        return value(r.score, {{"cuts", r.cuts}});
      }
      case Metric::perspective_consistency:
        return value(consistency::perspective_consistency(masks(), cc));
      case Metric::geometric_consistency: {
        const auto r = consistency::geometric_consistency(*b_.depth, b_.poses->track, b_.frame_count, cc);
        if (!r) return value(std::nullopt);
        return value(r->score, {{"pairs", r->pairs}, {"points", r->points}, {"occluded", r->occluded}});
      }
      case Metric::photometric_consistency: {
        double psnr = 0;
        const auto r = consistency::photometric_consistency([this](int i) { return b_.frame(i); }, *b_.depth,
                                                            b_.poses->track, b_.frame_count, cc, &psnr);
        if (!r) return value(std::nullopt);
        return value(r->score, {{"pairs", r->pairs}, {"psnr_db", psnr}});
      }
      case Metric::subject_consistency: {
        std::vector<long> area;
        if (present("masks")) {
          for (const auto& s : masks()) area.push_back(s.area);
        }
        return value(consistency::subject_consistency(*b_.embedding("subject_local"), *b_.embedding("subject_global"),
                                                      area.empty() ? nullptr : &area, cc));
      }
      case Metric::background_consistency:
        return value(consistency::background_consistency(*b_.embedding("background")));
      case Metric::causal_fidelity:
        return causal();
      case Metric::visual_plausibility:
        return value(judge::visual_plausibility_from_probs(*b_.vp_probs));
    }
    return value(std::nullopt);
  }

  const CaseManifest& c_;
  const SidecarBundle& b_;
  const EvalOptions& opt_;
  const MetricConfig& cfg_;
  ScoreCard card_;
  std::set<std::string> invalid_;
  std::unique_ptr<judge::Transcript> transcript_;
  std::optional<std::vector<consistency::MaskStats>> mask_stats_;
  std::optional<consistency::SpatialScores> spatial_;
};

}  // namespace

ScoreCard evaluate_case(const CaseManifest& c, const SidecarInspection& sidecars, const EvalOptions& opt) {
  if (!opt.cfg) throw std::invalid_argument("evaluate_case needs a config");
  return CaseEvaluator(c, sidecars, opt).run();
}

}  // namespace wbench
