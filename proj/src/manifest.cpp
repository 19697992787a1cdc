#include "wbench/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "wbench/errors.hpp"

namespace wbench {
namespace {

constexpr std::array<std::string_view, 8> kStyle = {
    "realistic", "anime", "cartoon", "cg", "oil_painting", "ink_wash", "pencil_sketch", "flat"};
constexpr std::array<std::string_view, 2> kPerspective = {"first_person", "third_person"};
constexpr std::array<std::string_view, 5> kSubject = {"human", "animal", "vehicle", "robot",
                                                      "other"};
constexpr std::array<std::string_view, 6> kScene = {"nature",  "urban",   "indoor",
                                                     "works",   "fantasy", "sports"};
constexpr std::array<std::string_view, 4> kTurnKind = {"navigation", "subject_action",
                                                       "event_editing", "perspective_switching"};
constexpr std::array<std::string_view, 6> kTrajectory = {"round_trip", "progressive", "repeat",
                                                         "l_shape",    "loop",        "zigzag"};
constexpr std::array<std::string_view, 7> kTrack2 = {
    "fluid", "collision", "surface", "deformation", "wind", "reflection", "human_motion"};
constexpr std::array<std::string_view, 4> kTranslation = {"W", "S", "A", "D"};
constexpr std::array<std::string_view, 4> kRotation = {"left", "right", "up", "down"};
constexpr std::array<std::string_view, 2> kSplit = {"nav", "full"};

template <class E>
struct Names;
template <> struct Names<Style> { static constexpr const auto& v = kStyle; };
template <> struct Names<Perspective> { static constexpr const auto& v = kPerspective; };
template <> struct Names<SubjectCategory> { static constexpr const auto& v = kSubject; };
template <> struct Names<SceneCategory> { static constexpr const auto& v = kScene; };
template <> struct Names<TurnKind> { static constexpr const auto& v = kTurnKind; };
template <> struct Names<TrajectoryType> { static constexpr const auto& v = kTrajectory; };
template <> struct Names<Track2Dim> { static constexpr const auto& v = kTrack2; };
template <> struct Names<TranslationKey> { static constexpr const auto& v = kTranslation; };
template <> struct Names<RotationKey> { static constexpr const auto& v = kRotation; };
template <> struct Names<Split> { static constexpr const auto& v = kSplit; };

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool valid_case_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

template <class E>
E parse_enum(std::string_view text, int line) {
  auto v = enum_from_string<E>(trim(text));
  if (!v) {
    throw ParseError("line " + std::to_string(line) + ": unknown value '" + std::string(text) +
                     "'");
  }
  return *v;
}

bool parse_bool(std::string_view text, int line) {
  text = trim(text);
  if (text == "true") return true;
  if (text == "false") return false;
  throw ParseError("line " + std::to_string(line) + ": expected true or false");
}

TurnSpec parse_turn(std::string_view value, int index, int line) {
  const auto colon = value.find(':');
  if (colon == std::string_view::npos) {
    throw ParseError("line " + std::to_string(line) + ": turn needs '<kind>: <payload>'");
  }
  TurnSpec t;
  t.index = index;
  t.kind = parse_enum<TurnKind>(value.substr(0, colon), line);
  const std::string_view payload = trim(value.substr(colon + 1));
  switch (t.kind) {
    case TurnKind::navigation:
      try {
        t.action = parse_navigation_keys(payload);
      } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line) + ": " + e.what());
      }
      break;
    case TurnKind::subject_action:
    case TurnKind::event_editing:
      t.action.instruction_text = std::string(payload);
      break;
    case TurnKind::perspective_switching: {
      // <source> -> <target>: <instruction>
      const auto arrow = payload.find("->");
      const auto sep = payload.find(':', arrow == std::string_view::npos ? 0 : arrow);
      if (arrow == std::string_view::npos || sep == std::string_view::npos) {
        throw ParseError("line " + std::to_string(line) +
                         ": perspective switch needs '<source> -> <target>: <instruction>'");
      }
      t.action.switch_source = parse_enum<Perspective>(payload.substr(0, arrow), line);
      t.action.switch_target =
          parse_enum<Perspective>(payload.substr(arrow + 2, sep - arrow - 2), line);
      t.action.instruction_text = std::string(trim(payload.substr(sep + 1)));
      break;
    }
  }
  return t;
}

std::set<Track2Dim> parse_track2(std::string_view value, int line) {
  std::set<Track2Dim> dims;
  value = trim(value);
  if (value.empty() || value == "none") return dims;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    const auto comma = value.find(',', pos);
    const auto item = trim(value.substr(pos, comma == std::string_view::npos ? value.npos
                                                                             : comma - pos));
    if (!dims.insert(parse_enum<Track2Dim>(item, line)).second) {
      throw ParseError("line " + std::to_string(line) + ": duplicate track2 dimension");
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return dims;
}

}  // namespace

template <class E>
std::optional<E> enum_from_string(std::string_view s) {
  const auto& names = Names<E>::v;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  return std::nullopt;
}

template <class E>
std::size_t enum_count() {
  return Names<E>::v.size();
}

#define WBENCH_ENUM(E)                                                          \
  std::string_view to_string(E v) { return Names<E>::v[static_cast<std::size_t>(v)]; } \
  template std::optional<E> enum_from_string<E>(std::string_view);             \
  template std::size_t enum_count<E>();

WBENCH_ENUM(Style)
WBENCH_ENUM(Perspective)
WBENCH_ENUM(SubjectCategory)
WBENCH_ENUM(SceneCategory)
WBENCH_ENUM(TurnKind)
WBENCH_ENUM(TrajectoryType)
WBENCH_ENUM(Track2Dim)
WBENCH_ENUM(TranslationKey)
WBENCH_ENUM(RotationKey)
WBENCH_ENUM(Split)
#undef WBENCH_ENUM

std::string ActionSpec::label() const {
  if (translation_keys.empty() && rotation_keys.empty()) return instruction_text.value_or("");
  std::string s;
  for (auto k : translation_keys) {
    if (!s.empty()) s += '+';
    s += to_string(k);
  }
  for (auto k : rotation_keys) {
    if (!s.empty()) s += '+';
    s += to_string(k);
  }
  return s;
}

bool CaseManifest::has_turn_kind(TurnKind k) const {
  return std::any_of(turns.begin(), turns.end(), [k](const TurnSpec& t) { return t.kind == k; });
}

ActionSpec parse_navigation_keys(std::string_view text) {
  ActionSpec a;
  std::size_t pos = 0;
  text = trim(text);
  while (pos <= text.size()) {
    const auto plus = text.find('+', pos);
    const auto key = trim(text.substr(pos, plus == std::string_view::npos ? text.npos : plus - pos));
    if (auto t = enum_from_string<TranslationKey>(key)) {
      if (!a.translation_keys.insert(*t).second) throw ParseError("duplicate key " + std::string(key));
    } else if (auto r = enum_from_string<RotationKey>(key)) {
      if (!a.rotation_keys.insert(*r).second) throw ParseError("duplicate key " + std::string(key));
    } else {
      throw ParseError("unknown navigation key '" + std::string(key) + "'");
    }
    if (plus == std::string_view::npos) break;
    pos = plus + 1;
  }
  return a;
}

void validate_case(const CaseManifest& c) {
  const auto& id = c.case_id;
  if (!valid_case_id(id)) throw SchemaError(id, "case_id", "must match [A-Za-z0-9_.-]+");
  if (c.turns.size() < 2 || c.turns.size() > 9) {
    throw SchemaError(id, "turns", "a case needs 2 to 9 turns, got " +
                                       std::to_string(c.turns.size()));
  }
  if (c.perspective == Perspective::third_person && !c.subject_category) {
    throw SchemaError(id, "subject_category", "required for third_person cases");
  }
  if (c.scene_text.empty()) throw SchemaError(id, "scene_text", "must not be empty");
  for (std::size_t i = 0; i < c.turns.size(); ++i) {
    const auto& t = c.turns[i];
    const std::string field = "turn[" + std::to_string(i) + "]";
    if (t.index != static_cast<int>(i)) throw SchemaError(id, field, "turn indices must be 0..n-1");
    const auto& a = t.action;
    if (t.kind == TurnKind::navigation) {
      if (a.translation_keys.empty() && a.rotation_keys.empty()) {
        throw SchemaError(id, field, "navigation turn needs at least one key");
      }
      auto has_t = [&](TranslationKey k) { return a.translation_keys.count(k) > 0; };
      auto has_r = [&](RotationKey k) { return a.rotation_keys.count(k) > 0; };
      if ((has_t(TranslationKey::W) && has_t(TranslationKey::S)) ||
          (has_t(TranslationKey::A) && has_t(TranslationKey::D)) ||
          (has_r(RotationKey::left) && has_r(RotationKey::right)) ||
          (has_r(RotationKey::up) && has_r(RotationKey::down))) {
        throw SchemaError(id, field, "opposing keys in one action");
      }
      if (a.rotation_keys.size() > 1) {
        throw SchemaError(id, field, "at most one rotation key per action");
      }
    } else {
      if (!a.instruction_text || a.instruction_text->empty()) {
        throw SchemaError(id, field, "non-navigation turn needs instruction text");
      }
      if (!a.translation_keys.empty() || !a.rotation_keys.empty()) {
        throw SchemaError(id, field, "navigation keys on a non-navigation turn");
      }
      if (t.kind == TurnKind::perspective_switching && (!a.switch_source || !a.switch_target)) {
        throw SchemaError(id, field, "perspective switch needs source and target");
      }
    }
  }
  if (c.trajectory && !c.has_turn_kind(TurnKind::navigation)) {
    throw SchemaError(id, "trajectory", "only navigation cases carry a trajectory type");
  }
}

Benchmark parse_manifest(std::string_view text) {
  Benchmark out;
  std::unordered_set<std::string> seen_ids;
  CaseManifest* cur = nullptr;
  std::set<std::string> seen_fields;

  auto finish = [&] {
    if (!cur) return;
    for (const char* req : {"scene_text", "style", "perspective", "scene_category",
                            "visible_part", "offscreen_part", "nav_split"}) {
      if (!seen_fields.count(req)) throw SchemaError(cur->case_id, req, "missing required field");
    }
    validate_case(*cur);
  };

  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      if (line.back() != ']' || line.substr(0, 6) != "[case ") {
        throw ParseError("line " + std::to_string(line_no) + ": expected '[case <id>]'");
      }
      finish();
      const std::string id(trim(line.substr(6, line.size() - 7)));
      if (!valid_case_id(id)) {
        throw ParseError("line " + std::to_string(line_no) + ": invalid case id '" + id + "'");
      }
      if (!seen_ids.insert(id).second) throw SchemaError(id, "case_id", "duplicate case_id");
      out.emplace_back();
      cur = &out.back();
      cur->case_id = id;
      seen_fields.clear();
      continue;
    }

    if (!cur) throw ParseError("line " + std::to_string(line_no) + ": field outside a case record");
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key != "turn" && !seen_fields.insert(key).second) {
      throw ParseError("line " + std::to_string(line_no) + ": repeated field '" + key + "'");
    }

    if (key == "scene_text") cur->scene_text = value;
    else if (key == "style") cur->style = parse_enum<Style>(value, line_no);
    else if (key == "perspective") cur->perspective = parse_enum<Perspective>(value, line_no);
    else if (key == "subject_category") cur->subject_category = parse_enum<SubjectCategory>(value, line_no);
    else if (key == "scene_category") cur->scene_category = parse_enum<SceneCategory>(value, line_no);
    else if (key == "trajectory") cur->trajectory = parse_enum<TrajectoryType>(value, line_no);
    else if (key == "visible_part") cur->visible_part = value;
    else if (key == "offscreen_part") cur->offscreen_part = value;
    else if (key == "appearance_part") cur->appearance_part = std::string(value);
    else if (key == "action_part") cur->action_part = std::string(value);
    else if (key == "physics_rule") cur->physics_rule = std::string(value);
    else if (key == "track2") cur->track2_dims = parse_track2(value, line_no);
    else if (key == "nav_split") cur->in_nav_split = parse_bool(value, line_no);
    else if (key == "turn") {
      cur->turns.push_back(parse_turn(value, static_cast<int>(cur->turns.size()), line_no));
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": unknown field '" + key + "'");
    }
  }
  finish();
  return out;
}

Benchmark load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open manifest " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

std::string serialize_manifest(const Benchmark& benchmark) {
  std::ostringstream o;
  bool first = true;
  for (const auto& c : benchmark) {
    if (!first) o << '\n';
    first = false;
    o << "[case " << c.case_id << "]\n";
    o << "scene_text = " << c.scene_text << '\n';
    o << "style = " << to_string(c.style) << '\n';
    o << "perspective = " << to_string(c.perspective) << '\n';
    if (c.subject_category) o << "subject_category = " << to_string(*c.subject_category) << '\n';
    o << "scene_category = " << to_string(c.scene_category) << '\n';
    if (c.trajectory) o << "trajectory = " << to_string(*c.trajectory) << '\n';
    o << "visible_part = " << c.visible_part << '\n';
    o << "offscreen_part = " << c.offscreen_part << '\n';
    if (c.appearance_part) o << "appearance_part = " << *c.appearance_part << '\n';
    if (c.action_part) o << "action_part = " << *c.action_part << '\n';
    if (c.physics_rule) o << "physics_rule = " << *c.physics_rule << '\n';
    o << "track2 = ";
    if (c.track2_dims.empty()) o << "none";
    bool firstdim = true;
    for (auto d : c.track2_dims) {
      if (!firstdim) o << ", ";
      firstdim = false;
      o << to_string(d);
    }
    o << '\n';
    o << "nav_split = " << (c.in_nav_split ? "true" : "false") << '\n';
    for (const auto& t : c.turns) {
      o << "turn = " << to_string(t.kind) << ": ";
      if (t.kind == TurnKind::navigation) {
        o << t.action.label();
      } else if (t.kind == TurnKind::perspective_switching) {
        o << to_string(*t.action.switch_source) << " -> " << to_string(*t.action.switch_target)
          << ": " << t.action.instruction_text.value_or("");
      } else {
        o << t.action.instruction_text.value_or("");
      }
      o << '\n';
    }
  }
  return o.str();
}

Benchmark split_track(const Benchmark& benchmark, Split split) {
  if (split == Split::full) return benchmark;
  Benchmark out;
  std::copy_if(benchmark.begin(), benchmark.end(), std::back_inserter(out),
               [](const CaseManifest& c) { return c.in_nav_split; });
  return out;
}

}  // namespace wbench
