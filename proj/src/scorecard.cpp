#include "wbench/scorecard.hpp"

#include <algorithm>

#include "wbench/errors.hpp"

namespace wbench {
namespace {

struct MetricInfo {
  Metric metric;
  const char* name;
  const char* label;
  Dimension dim;
  bool judge;
  std::vector<std::string> inputs;
};

const std::vector<MetricInfo>& table() {
  using D = Dimension;
  static const std::vector<MetricInfo> t = {
      {Metric::aesthetic_quality, "aesthetic_quality", "V.1 Aesthetic", D::video_quality, false, {"aesthetic_raw"}},
      {Metric::imaging_quality, "imaging_quality", "V.2 Imaging", D::video_quality, false, {"imaging_raw"}},
      {Metric::temporal_flickering, "temporal_flickering", "V.3 Flicker", D::video_quality, false, {"frames"}},
      {Metric::dynamic_degree, "dynamic_degree", "V.4 Dynamic", D::video_quality, false, {"flow_top5_mean"}},
      {Metric::motion_smoothness, "motion_smoothness", "V.5 Smoothness", D::video_quality, false, {"smoothness_pair_mae"}},
      {Metric::hps_norm, "hps_norm", "V.6 HPS-Norm", D::video_quality, false, {"hps_raw"}},
      {Metric::scene_adherence, "scene_adherence", "S.1 Scene", D::setting_adherence, true, {"frames"}},
      {Metric::subject_adherence, "subject_adherence", "S.2 Subject", D::setting_adherence, true, {"frames"}},
      {Metric::navigation, "navigation", "I.1 Navigation", D::interaction_adherence, false, {"poses"}},
      {Metric::event_editing, "event_editing", "I.2 Event edit", D::interaction_adherence, true, {"frames"}},
      {Metric::subject_action, "subject_action", "I.3 Subject action", D::interaction_adherence, true, {"frames"}},
      {Metric::perspective_switching, "perspective_switching", "I.4 Persp. switch", D::interaction_adherence, true, {"frames"}},
      {Metric::spatial_consistency, "spatial_consistency", "C.1 Spatial", D::consistency, false, {"poses", "dreamsim_d0"}},
      {Metric::gated_spatial_consistency, "gated_spatial_consistency", "C.2 Gated spatial", D::consistency, false, {"poses", "dreamsim_d0"}},
      {Metric::segment_continuity, "segment_continuity", "C.3 Segment", D::consistency, false, {"cut_prob"}},
      {Metric::perspective_consistency, "perspective_consistency", "C.4 Perspective", D::consistency, false, {"masks"}},
      {Metric::geometric_consistency, "geometric_consistency", "C.5 Geometric", D::consistency, false, {"depth", "poses"}},
      {Metric::photometric_consistency, "photometric_consistency", "C.6 Photometric", D::consistency, false, {"depth", "poses", "frames"}},
      {Metric::subject_consistency, "subject_consistency", "C.7 Subject", D::consistency, false, {"subject_local", "subject_global"}},
      {Metric::background_consistency, "background_consistency", "C.8 Background", D::consistency, false, {"background"}},
      {Metric::causal_fidelity, "causal_fidelity", "P.1 Causal", D::physical, true, {"frames"}},
      {Metric::visual_plausibility, "visual_plausibility", "P.2 Plausibility", D::physical, false, {"vp_probs"}},
  };
  return t;
}

const MetricInfo& info(Metric m) { return table()[static_cast<std::size_t>(m)]; }

template <class E>
E enum_or_throw(const nlohmann::json& j, const char* field) {
  auto v = enum_from_string<E>(j.at(field).get<std::string>());
  if (!v) throw FormatError(std::string("scorecard: bad ") + field);
  return *v;
}

nlohmann::json opt_num(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> num_opt(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

const std::array<Metric, kMetricCount>& all_metrics() {
  static const std::array<Metric, kMetricCount> all = [] {
    std::array<Metric, kMetricCount> a{};
    for (std::size_t k = 0; k < kMetricCount; ++k) a[k] = static_cast<Metric>(k);
    return a;
  }();
  return all;
}

std::string_view metric_name(Metric m) { return info(m).name; }
std::string_view metric_label(Metric m) { return info(m).label; }
Dimension metric_dimension(Metric m) { return info(m).dim; }
bool metric_uses_judge(Metric m) { return info(m).judge; }
const std::vector<std::string>& metric_inputs(Metric m) { return info(m).inputs; }

std::optional<Metric> metric_from_name(std::string_view name) {
  for (const auto& i : table()) {
    if (name == i.name) return i.metric;
  }
  return std::nullopt;
}

std::string_view dimension_name(Dimension d) {
  static constexpr const char* names[] = {"video_quality", "setting_adherence",
                                          "interaction_adherence", "consistency", "physical"};
  return names[static_cast<int>(d)];
}

bool metric_applicable(const CaseManifest& c, Metric m) {
  const bool tpp = c.perspective == Perspective::third_person;
  switch (m) {
    case Metric::subject_adherence:
    case Metric::perspective_consistency:
      return tpp;
    case Metric::subject_consistency:
      return c.subject_category.has_value();
    case Metric::navigation:
      return c.has_turn_kind(TurnKind::navigation);
    case Metric::event_editing:
      return c.has_turn_kind(TurnKind::event_editing);
    case Metric::subject_action:
      return c.has_turn_kind(TurnKind::subject_action);
    case Metric::perspective_switching:
      return c.has_turn_kind(TurnKind::perspective_switching);
    case Metric::spatial_consistency:
    case Metric::gated_spatial_consistency:
      return c.trajectory == TrajectoryType::round_trip && c.has_turn_kind(TurnKind::navigation);
    default:
      return true;
  }
}

std::optional<double> ScoreCard::value(Metric m) const {
  auto it = metrics.find(m);
  if (it == metrics.end()) return std::nullopt;
  return it->second.value;
}

nlohmann::json to_json(const ScoreCard& card) {
  nlohmann::json j;
  j["case_id"] = card.case_id;
  j["model_id"] = card.model_id;
  j["perspective"] = to_string(card.perspective);
  j["scene_category"] = to_string(card.scene_category);
  j["subject_category"] =
      card.subject_category ? nlohmann::json(to_string(*card.subject_category)) : nlohmann::json(nullptr);
  j["in_nav_split"] = card.in_nav_split;
  j["config_digest"] = card.config_digest;
  auto& kinds = j["turn_kinds"] = nlohmann::json::array();
  for (auto k : card.turn_kinds) kinds.push_back(to_string(k));
  auto& metrics = j["metrics"] = nlohmann::json::object();
  for (const auto& [m, r] : card.metrics) {
    nlohmann::json e;
    e["value"] = opt_num(r.value);
    if (!r.reason.empty()) e["reason"] = r.reason;
    if (!r.detail.is_null()) e["detail"] = r.detail;
    metrics[std::string(metric_name(m))] = e;
  }
  auto& na = j["not_applicable"] = nlohmann::json::array();
  for (auto m : card.not_applicable) na.push_back(metric_name(m));
  auto& turns = j["turns"] = nlohmann::json::array();
  for (const auto& t : card.turns) {
    nlohmann::json e = {{"turn", t.turn},
                        {"kind", to_string(t.kind)},
                        {"metric", metric_name(t.metric)},
                        {"score", opt_num(t.score)}};
    if (!t.reason.empty()) e["reason"] = t.reason;
    turns.push_back(e);
  }
  nlohmann::json v;
  v["missing_inputs"] = card.validity.missing_inputs;
  auto& ex = v["excluded"] = nlohmann::json::object();
  for (const auto& [m, reason] : card.validity.excluded) ex[std::string(metric_name(m))] = reason;
  auto& issues = v["issues"] = nlohmann::json::array();
  for (const auto& i : card.validity.issues) {
    issues.push_back({{"role", i.role}, {"kind", i.kind}, {"message", i.message}});
  }
  v["transport_failure"] = card.validity.transport_failure;
  j["validity"] = v;
  return j;
}

ScoreCard scorecard_from_json(const nlohmann::json& j) {
  try {
    ScoreCard c;
    c.case_id = j.at("case_id").get<std::string>();
    c.model_id = j.at("model_id").get<std::string>();
    c.perspective = enum_or_throw<Perspective>(j, "perspective");
    c.scene_category = enum_or_throw<SceneCategory>(j, "scene_category");
    if (!j.at("subject_category").is_null()) c.subject_category = enum_or_throw<SubjectCategory>(j, "subject_category");
    c.in_nav_split = j.at("in_nav_split").get<bool>();
    c.config_digest = j.value("config_digest", "");
    for (const auto& k : j.at("turn_kinds")) {
      auto v = enum_from_string<TurnKind>(k.get<std::string>());
      if (!v) throw FormatError("scorecard: bad turn kind");
      c.turn_kinds.push_back(*v);
    }
    for (const auto& [name, e] : j.at("metrics").items()) {
      auto m = metric_from_name(name);
      if (!m) throw FormatError("scorecard: unknown metric " + name);
      MetricResult r;
      r.value = num_opt(e.at("value"));
      r.reason = e.value("reason", "");
      if (e.contains("detail")) r.detail = e.at("detail");
      c.metrics[*m] = r;
    }
    for (const auto& n : j.at("not_applicable")) {
      auto m = metric_from_name(n.get<std::string>());
      if (!m) throw FormatError("scorecard: unknown metric");
      c.not_applicable.push_back(*m);
    }
    for (const auto& e : j.at("turns")) {
      TurnScore t;
      t.turn = e.at("turn").get<int>();
      auto k = enum_from_string<TurnKind>(e.at("kind").get<std::string>());
      auto m = metric_from_name(e.at("metric").get<std::string>());
      if (!k || !m) throw FormatError("scorecard: bad turn entry");
      t.kind = *k;
      t.metric = *m;
      t.score = num_opt(e.at("score"));
      t.reason = e.value("reason", "");
      c.turns.push_back(t);
    }
    const auto& v = j.at("validity");
    c.validity.missing_inputs = v.at("missing_inputs").get<std::vector<std::string>>();
    for (const auto& [name, reason] : v.at("excluded").items()) {
      auto m = metric_from_name(name);
      if (!m) throw FormatError("scorecard: unknown metric " + name);
      c.validity.excluded[*m] = reason.get<std::string>();
    }
    for (const auto& i : v.at("issues")) {
      c.validity.issues.push_back({i.at("role").get<std::string>(), i.at("kind").get<std::string>(),
                                   i.at("message").get<std::string>()});
    }
    c.validity.transport_failure = v.value("transport_failure", false);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("scorecard: ") + e.what());
  }
}

std::string dump_scorecard(const ScoreCard& card) { return to_json(card).dump(2) + "\n"; }

}  // namespace wbench
