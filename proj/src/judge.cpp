#include "wbench/judge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "wbench/digest.hpp"
#include "wbench/errors.hpp"

namespace wbench::judge {
namespace {

std::string perspective_words(Perspective p) {
  return p == Perspective::first_person ? "first-person" : "third-person";
}

std::string style_words(Style s) {
  std::string out(to_string(s));
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

std::string markers(int first, int count) {
  std::string s;
  for (int k = 0; k < count; ++k) {
    if (k) s += '\n';
    s += frame_marker(first + k);
  }
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

std::string frame_marker(int k) { return "[Frame " + std::to_string(k) + "]"; }

std::string PromptBundle::digest() const {
  nlohmann::json j;
  j["template_id"] = template_id;
  j["system"] = system_text;
  j["user"] = user_text;
  nlohmann::json frames_j = nlohmann::json::array();
  for (const auto& a : frames) {
    frames_j.push_back({{"frame", a.frame}, {"sha256", sha256_hex(read_file(a.path))}});
  }
  j["frames"] = frames_j;
  return sha256_hex(j.dump());
}

std::string fill_placeholders(const std::string& text, const std::map<std::string, std::string>& subs) {
  static const std::regex re(R"(\[([A-Z][A-Z0-9_]*)\])");
  std::string out;
  auto begin = std::sregex_iterator(text.begin(), text.end(), re);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.append(text, last, m.position(0) - last);
    auto s = subs.find(m[1].str());
    if (s == subs.end()) throw MissingFieldError("no substitution for [" + m[1].str() + "]");
    out += s->second;
    last = m.position(0) + m.length(0);
  }
  out.append(text, last, std::string::npos);
  return out;
}

std::vector<int> sample_frames(const TurnRange& range, double source_fps, double target_fps) {
  std::vector<int> out;
  if (range.size() <= 0) return out;
  const double step = std::max(1.0, source_fps / target_fps);
  for (int k = 0;; ++k) {
    const int f = range.begin + static_cast<int>(std::lround(k * step));
    if (f >= range.end) break;
    if (out.empty() || f != out.back()) out.push_back(f);
  }
  return out;
}

std::string action_text(const CaseManifest& c, const TurnSpec& turn) {
  if (turn.kind != TurnKind::navigation) return turn.action.instruction_text.value_or("");
  const bool fpp = c.perspective == Perspective::first_person;
  std::vector<std::string> parts;
  for (auto k : turn.action.translation_keys) {
    switch (k) {
      case TranslationKey::W: parts.push_back(fpp ? "Camera pushes forward" : "Subject walks forward"); break;
      case TranslationKey::S: parts.push_back(fpp ? "Camera pulls backward" : "Subject steps backward"); break;
      case TranslationKey::A: parts.push_back(fpp ? "Camera strafes left" : "Subject moves left"); break;
      case TranslationKey::D: parts.push_back(fpp ? "Camera strafes right" : "Subject moves right"); break;
    }
  }
  for (auto k : turn.action.rotation_keys) {
    switch (k) {
      case RotationKey::left: parts.push_back(fpp ? "View turns left" : "Camera orbits left"); break;
      case RotationKey::right: parts.push_back(fpp ? "View turns right" : "Camera orbits right"); break;
      case RotationKey::up: parts.push_back(fpp ? "View tilts up" : "Camera elevates"); break;
      case RotationKey::down: parts.push_back(fpp ? "View tilts down" : "Camera descends"); break;
    }
  }
  std::string s;
  for (const auto& p : parts) s += (s.empty() ? "" : " and ") + p;
  return s;
}

PromptBundle render_prompt(const std::string& template_name, const CaseManifest& c, int turn,
                           const std::vector<Attachment>& frames, std::optional<Track2Dim> dim,
                           int persp_group_frames) {
  const Template& t = get_template(template_name);
  const std::string name = t.id.substr(0, t.id.find('@'));
  const bool per_turn = name == "event_editing" || name == "subject_action" ||
                        name == "perspective_switching" || name == "causal_track1" ||
                        name == "causal_track2";
  if (per_turn && (turn < 0 || turn >= static_cast<int>(c.turns.size()))) {
    throw MissingFieldError(c.case_id + ": turn " + std::to_string(turn) + " out of range");
  }

  PromptBundle b;
  b.template_id = t.id;
  b.system_text = t.system;
  b.frames = frames;
  auto& subs = b.substitutions;
  const int n = static_cast<int>(frames.size());
  subs["FRAME_SEQUENCE"] = markers(1, n);

  auto require = [&](const std::optional<std::string>& v, const char* field) {
    if (!v || v->empty()) throw MissingFieldError(c.case_id + ": " + field + " is required");
    return *v;
  };

  if (name == "scene_adherence") {
    subs["VISIBLE_PART"] = c.visible_part;
    subs["STYLE"] = style_words(c.style);
    subs["OFFSCREEN_PART"] = c.offscreen_part;
  } else if (name == "subject_adherence") {
    subs["APPEARANCE_PART"] = require(c.appearance_part, "appearance_part");
    subs["ACTION_PART"] = require(c.action_part, "action_part");
  } else if (name == "event_editing" || name == "subject_action") {
    subs["SCENE_DESCRIPTION"] = c.scene_text;
    subs["ACTION"] = require(c.turns[turn].action.instruction_text, "instruction_text");
  } else if (name == "perspective_switching") {
    const auto& a = c.turns[turn].action;
    if (!a.switch_source || !a.switch_target) {
      throw MissingFieldError(c.case_id + ": perspective switch needs source and target");
    }
    subs["SWITCH_INSTRUCTION"] = require(a.instruction_text, "instruction_text");
    subs["SOURCE_PERSPECTIVE"] = perspective_words(*a.switch_source);
    subs["TARGET_PERSPECTIVE"] = perspective_words(*a.switch_target);
    // Early and late groups; short sequences split in half.
    int g = std::min(persp_group_frames, n / 2);
    if (g < 1) throw MissingFieldError(c.case_id + ": perspective switch needs at least two frames");
    std::vector<Attachment> picked(frames.begin(), frames.begin() + g);
    picked.insert(picked.end(), frames.end() - g, frames.end());
    b.frames = picked;
    subs["EARLY_FRAME_SEQUENCE"] = markers(1, g);
    subs["LATE_FRAME_SEQUENCE"] = markers(g + 1, g);
  } else if (name == "causal_track1") {
    subs["SCENE_DESC"] = c.scene_text;
    subs["ACTION"] = action_text(c, c.turns[turn]);
    subs["RULE_DESC"] = c.physics_rule.value_or("None");
  } else if (name == "causal_track2") {
    if (!dim) throw MissingFieldError(c.case_id + ": Track-2 prompt needs a dimension");
    const auto& info = dim_info(*dim);
    subs["SCENE_DESCRIPTION"] = c.scene_text;
    subs["DIM_ID"] = std::to_string(static_cast<int>(*dim) + 1);
    subs["DIM_NAME"] = info.name;
    subs["DIM_DESCRIPTION"] = info.description;
    subs["DIM_SCORING_PROMPT"] = info.rubric;
  } else if (name == "causal_dim_select") {
    std::string seq;
    for (const auto& tt : c.turns) {
      if (!seq.empty()) seq += "; ";
      seq += "Turn " + std::to_string(tt.index + 1) + ": " + action_text(c, tt);
    }
    subs["SCENE_DESCRIPTION"] = c.scene_text;
    subs["FULL_INTERACTION_SEQUENCE"] = seq;
    subs["ENV_DETAILS"] = c.visible_part + " " + c.offscreen_part;
    b.frames.clear();
  }
  b.user_text = fill_placeholders(t.user, subs);
  return b;
}

std::vector<bool> parse_binary_answers(const std::string& raw, int expected_count) {
  static const std::regex labelled(R"(\bQ\s*(\d+)\b[^\n:]*?[:.)\-]?\s*\**\s*(yes|no)\b)",
                                   std::regex::icase);
  static const std::regex bare(R"(\b(yes|no)\b)", std::regex::icase);
  std::map<int, bool> by_q;
  for (auto it = std::sregex_iterator(raw.begin(), raw.end(), labelled); it != std::sregex_iterator(); ++it) {
    const int q = std::stoi((*it)[1].str());
    std::string v = (*it)[2].str();
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    const bool yes = v == "yes";
    auto [pos, inserted] = by_q.emplace(q, yes);
    if (!inserted && pos->second != yes) throw MalformedAnswer("conflicting verdicts for Q" + std::to_string(q));
  }
  std::vector<bool> out;
  if (!by_q.empty()) {
    for (int q = 1; q <= expected_count; ++q) {
      auto it = by_q.find(q);
      if (it == by_q.end()) throw MalformedAnswer("no verdict for Q" + std::to_string(q));
      out.push_back(it->second);
    }
    if (static_cast<int>(by_q.size()) != expected_count) throw MalformedAnswer("unexpected question labels");
    return out;
  }
  for (auto it = std::sregex_iterator(raw.begin(), raw.end(), bare); it != std::sregex_iterator(); ++it) {
    std::string v = (*it)[1].str();
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    out.push_back(v == "yes");
  }
  if (static_cast<int>(out.size()) != expected_count) {
    throw MalformedAnswer("expected " + std::to_string(expected_count) + " verdicts, found " +
                          std::to_string(out.size()));
  }
  return out;
}

namespace {

int json_int(const nlohmann::json& obj, const std::string& key) {
  if (!obj.contains(key)) throw MalformedAnswer("reply lacks \"" + key + "\"");
  const auto& v = obj.at(key);
  double d;
  if (v.is_number()) {
    d = v.get<double>();
  } else if (v.is_string()) {
    try {
      std::size_t used = 0;
      d = std::stod(v.get<std::string>(), &used);
    } catch (const std::logic_error&) {
      throw MalformedAnswer("\"" + key + "\" is not a number");
    }
  } else {
    throw MalformedAnswer("\"" + key + "\" is not a number");
  }
  if (d != std::floor(d)) throw MalformedAnswer("\"" + key + "\" is not an integer");
  return static_cast<int>(d);
}

}  // namespace

AdherenceReply parse_adherence(const std::string& raw, const std::string& flag_key) {
  const auto open = raw.find('{');
  const auto close = raw.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw MalformedAnswer("no JSON object in reply");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(raw.substr(open, close - open + 1));
  } catch (const nlohmann::json::exception& e) {
    throw MalformedAnswer(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw MalformedAnswer("reply is not a JSON object");
  AdherenceReply r;
  r.grade = json_int(j, "maintenance");
  r.flag = json_int(j, flag_key);
  if (r.grade < 1 || r.grade > 5) throw MalformedAnswer("maintenance outside 1..5");
  if (r.flag != 0 && r.flag != 1) throw MalformedAnswer(flag_key + " outside {0,1}");
  return r;
}

int parse_grade03(const std::string& raw) {
  static const std::regex score(R"(score\s*(?:of|is)?\s*[:=]?\s*\**\s*([0-9]+)\b)", std::regex::icase);
  static const std::regex rubric(R"((?:^|\n)\s*([0-3])\s*(?:-|=)\s*(?:Good|Fair|Poor|Failure)\b)",
                                 std::regex::icase);
  std::optional<int> found;
  for (auto it = std::sregex_iterator(raw.begin(), raw.end(), score); it != std::sregex_iterator(); ++it) {
    found = std::stoi((*it)[1].str());
  }
  if (!found) {
    const std::string t = trim(raw);
    if (t.size() == 1 && t[0] >= '0' && t[0] <= '9') found = t[0] - '0';
  }
  if (!found) {
    for (auto it = std::sregex_iterator(raw.begin(), raw.end(), rubric); it != std::sregex_iterator(); ++it) {
      found = std::stoi((*it)[1].str());
    }
  }
  if (!found) throw MalformedAnswer("no 0-3 score in reply");
  if (*found < 0 || *found > 3) throw MalformedAnswer("score outside 0..3");
  return *found;
}

std::set<Track2Dim> parse_dim_selection(const std::string& raw) {
  static const std::regex numbered(R"(\(([1-7])\))");
  std::set<Track2Dim> dims;
  for (auto it = std::sregex_iterator(raw.begin(), raw.end(), numbered); it != std::sregex_iterator(); ++it) {
    dims.insert(static_cast<Track2Dim>(std::stoi((*it)[1].str()) - 1));
  }
  if (!dims.empty()) return dims;
  std::string lower = raw;
  std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
  for (std::size_t d = 0; d < 7; ++d) {
    std::string head = dim_info(static_cast<Track2Dim>(d)).name;
    head = head.substr(0, head.find(' '));
    std::transform(head.begin(), head.end(), head.begin(), ::tolower);
    if (lower.find(head) != std::string::npos) dims.insert(static_cast<Track2Dim>(d));
  }
  return dims;
}

void parse_answer(const Template& t, JudgeAnswer& a) {
  switch (t.schema) {
    case AnswerSchema::binary:
      a.verdicts = parse_binary_answers(a.raw_text, t.questions);
      break;
    case AnswerSchema::adherence_scene:
      a.adherence = parse_adherence(a.raw_text, "offscreen");
      break;
    case AnswerSchema::adherence_subject:
      a.adherence = parse_adherence(a.raw_text, "action");
      break;
    case AnswerSchema::grade03:
      a.grade = parse_grade03(a.raw_text);
      break;
    case AnswerSchema::dim_select:
      a.dims = parse_dim_selection(a.raw_text);
      break;
    case AnswerSchema::rating: {
      const std::string t2 = trim(a.raw_text);
      bool ok = false;
      for (const char* tok : kRatingTokens) ok = ok || t2.rfind(tok, 0) == 0;
      if (!ok) throw MalformedAnswer("reply is not a rating token");
      break;
    }
  }
  a.status = ParseStatus::ok;
}

int score_event_or_action(const std::vector<bool>& answers, const std::vector<bool>& expected) {
  if (answers.size() != expected.size()) throw std::invalid_argument("verdict count mismatch");
  int s = 0;
  for (std::size_t k = 0; k < answers.size(); ++k) s += answers[k] == expected[k];
  return s;
}

int score_persp_switch(const std::vector<bool>& answers) {
  if (answers.size() != 3) throw std::invalid_argument("perspective switch needs 3 verdicts");
  return answers[0] && answers[1] && answers[2] ? 1 : 0;
}

double score_interaction_case(TurnKind kind, const std::vector<int>& turn_scores) {
  if (turn_scores.empty()) throw std::invalid_argument("no interaction turn scores");
  double m = 0;
  for (int v : turn_scores) m += v;
  m /= static_cast<double>(turn_scores.size());
  return kind == TurnKind::perspective_switching ? 100.0 * m : 20.0 * m;
}

double score_scene_adherence(int maintenance, int offscreen) {
  if (maintenance < 1 || maintenance > 5 || (offscreen != 0 && offscreen != 1)) {
    throw MalformedAnswer("scene adherence fields out of range");
  }
  return 100.0 * (maintenance / 5.0 + offscreen) / 2.0;
}

double score_subject_adherence(int appearance, int action) {
  if (appearance < 1 || appearance > 5 || (action != 0 && action != 1)) {
    throw MalformedAnswer("subject adherence fields out of range");
  }
  return 100.0 * (appearance / 5.0 + action) / 2.0;
}

double causal_turn_score(int track1, const std::vector<int>& track2) {
  if (track2.empty()) return track1;
  double m = 0;
  for (int v : track2) m += v;
  m /= static_cast<double>(track2.size());
  return (track1 + m) / 2.0;
}

double score_causal_fidelity(const std::vector<double>& turn_scores) {
  if (turn_scores.empty()) throw std::invalid_argument("no causal turn scores");
  double m = 0;
  for (double v : turn_scores) m += v;
  return m / static_cast<double>(turn_scores.size()) * 100.0 / 3.0;
}

std::optional<double> visual_plausibility_from_probs(const std::map<std::string, double>& probs) {
  double total = 0, expect = 0;
  for (int k = 0; k < 5; ++k) {
    auto it = probs.find(kRatingTokens[k]);
    const double p = it == probs.end() ? 0.0 : it->second;
    total += p;
    expect += p * (5 - k);
  }
  if (!(total > 0)) return std::nullopt;
  const double s = expect / total;
  return std::clamp(100.0 * (s - 1.0) / 4.0, 0.0, 100.0);
}

// ---- clients ----

std::string StubJudge::complete(const ChatRequest& req) {
  const Template& t = get_template(req.bundle->template_id);
  const std::string key = std::to_string(seed_) + ":" + req.bundle->digest();
  auto draw = [&](int stream) { return sha256_u64(key + ":" + std::to_string(stream)); };
  std::ostringstream o;
  switch (t.schema) {
    case AnswerSchema::binary:
      for (int q = 1; q <= t.questions; ++q) {
        o << "Q" << q << ": " << ((draw(q) & 1) ? "Yes" : "No") << "\nReason: stub verdict.\n";
      }
      break;
    case AnswerSchema::adherence_scene:
    case AnswerSchema::adherence_subject: {
      const char* flag = t.schema == AnswerSchema::adherence_scene ? "offscreen" : "action";
      o << "{\"maintenance\": " << 1 + draw(1) % 5 << ", \"maintenance_reason\": \"stub\", \"" << flag
        << "\": " << draw(2) % 2 << ", \"" << flag << "_reason\": \"stub\"}";
      break;
    }
    case AnswerSchema::grade03:
      o << "No notable events.\nScore: " << draw(1) % 4;
      break;
    case AnswerSchema::dim_select: {
      const auto bits = draw(1);
      bool any = false;
      for (int d = 0; d < 7; ++d) {
        if ((bits >> d) & 1) {
          o << (any ? ", " : "") << "(" << d + 1 << ")";
          any = true;
        }
      }
      if (!any) o << "None";
      break;
    }
    case AnswerSchema::rating:
      o << kRatingTokens[draw(1) % 5];
      break;
  }
  return o.str();
}

EndpointJudge::EndpointJudge(std::string url, std::string model, std::chrono::seconds timeout)
    : model_(std::move(model)), timeout_(timeout) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("endpoint URL must be http(s)://host[:port]/path");
  scheme_host_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
}

nlohmann::json EndpointJudge::request_body(const ChatRequest& req) const {
  const PromptBundle& b = *req.bundle;
  auto image_part = [](const Attachment& a) {
    std::string bytes = read_file(a.path);
    if (a.path.size() < 4 || a.path.substr(a.path.size() - 4) != ".png") bytes = encode_png(read_image(a.path));
    return nlohmann::json{{"type", "image_url"},
                          {"image_url", {{"url", "data:image/png;base64," + base64_encode(bytes)}}}};
  };
  nlohmann::json content = nlohmann::json::array();
  std::map<std::string, std::size_t> marker_to_frame;
  for (std::size_t k = 0; k < b.frames.size(); ++k) marker_to_frame[frame_marker(static_cast<int>(k) + 1)] = k;
  bool inline_frames = b.user_text.find(frame_marker(1)) != std::string::npos;
  if (!inline_frames) {
    for (const auto& a : b.frames) content.push_back(image_part(a));
  }
  std::string pending;
  std::istringstream lines(b.user_text);
  std::string line;
  bool first = true;
  while (std::getline(lines, line)) {
    auto it = inline_frames ? marker_to_frame.find(line) : marker_to_frame.end();
    if (it != marker_to_frame.end()) {
      pending += (first ? "" : "\n") + line;
      content.push_back({{"type", "text"}, {"text", pending}});
      pending.clear();
      content.push_back(image_part(b.frames[it->second]));
      first = true;
      continue;
    }
    pending += (first ? "" : "\n") + line;
    first = false;
  }
  if (!pending.empty()) content.push_back({{"type", "text"}, {"text", pending}});

  nlohmann::json messages = nlohmann::json::array();
  if (!b.system_text.empty()) messages.push_back({{"role", "system"}, {"content", b.system_text}});
  messages.push_back({{"role", "user"}, {"content", content}});
  if (!req.reask.empty()) {
    messages.push_back({{"role", "assistant"}, {"content", req.previous}});
    messages.push_back({{"role", "user"}, {"content", req.reask}});
  }
  return {{"model", model_}, {"temperature", 0}, {"messages", messages}};
}

std::string EndpointJudge::complete(const ChatRequest& req) {
  httplib::Client cli(scheme_host_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  cli.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (const char* key = std::getenv("WBENCH_JUDGE_API_KEY"); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = cli.Post(path_, headers, request_body(req).dump(), "application/json");
  if (!res) throw TransportError("judge endpoint unreachable: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("judge endpoint returned HTTP " + std::to_string(res->status));
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("judge endpoint response lacks choices[0].message.content: ") + e.what());
  }
}

ReplayJudge::ReplayJudge(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("no transcript directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      if (!j.contains("raw")) continue;
      answers_.emplace(std::make_pair(j.at("digest").get<std::string>(), j.at("reask").get<bool>()),
                       j.at("raw").get<std::string>());
    }
  }
}

std::string ReplayJudge::complete(const ChatRequest& req) {
  auto it = answers_.find({req.bundle->digest(), !req.reask.empty()});
  if (it == answers_.end()) throw TransportError("no recorded answer for prompt " + req.bundle->template_id);
  return it->second;
}

void Transcript::record(const nlohmann::json& entry) {
  if (path_.empty()) return;
  std::lock_guard<std::mutex> lock(mu_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  out << entry.dump() << '\n';
}

JudgeAnswer run_judge(const PromptBundle& bundle, const RunContext& ctx) {
  if (!ctx.client || !ctx.cfg) throw std::invalid_argument("run_judge needs a client and config");
  const Template& t = get_template(bundle.template_id);
  const std::string digest = bundle.digest();
  const Sleeper sleep = ctx.sleep ? ctx.sleep : Sleeper([](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  });
  JudgeAnswer answer;

  auto log = [&](bool reask, int attempt, const std::string& status, const std::string* raw,
                 const std::string& error) {
    if (!ctx.transcript) return;
    nlohmann::json e = {{"case", ctx.case_id},   {"turn", ctx.turn},     {"template_id", t.id},
                        {"digest", digest},      {"reask", reask},       {"attempt", attempt},
                        {"status", status}};
    if (raw) e["raw"] = *raw;
    if (!error.empty()) e["error"] = error;
    ctx.transcript->record(e);
  };

  auto send = [&](const ChatRequest& req) {
    const bool reask = !req.reask.empty();
    for (int attempt = 1;; ++attempt) {
      ++answer.attempts;
      try {
        return ctx.client->complete(req);
      } catch (const TransportError& e) {
        log(reask, attempt, "transport_error", nullptr, e.what());
        if (attempt >= ctx.cfg->max_attempts) throw;
        const auto& bo = ctx.cfg->backoff_ms;
        const int ms = bo.empty() ? 0 : bo[std::min<std::size_t>(attempt - 1, bo.size() - 1)];
        sleep(std::chrono::milliseconds(ms));
      }
    }
  };

  auto try_parse = [&](bool reask) {
    try {
      parse_answer(t, answer);
      log(reask, answer.attempts, "ok", &answer.raw_text, "");
      return true;
    } catch (const MalformedAnswer& e) {
      answer.status = ParseStatus::malformed;
      answer.error = e.what();
      log(reask, answer.attempts, "malformed", &answer.raw_text, e.what());
      return false;
    }
  };

  ChatRequest req{&bundle, "", ""};
  answer.raw_text = send(req);
  if (try_parse(false)) return answer;

  std::string instruction = "Your previous reply could not be parsed (" + answer.error + "). ";
  switch (t.schema) {
    case AnswerSchema::binary:
      instruction += "Reply with exactly " + std::to_string(t.questions) +
                     " lines of the form 'Q<n>: Yes' or 'Q<n>: No'.";
      break;
    case AnswerSchema::adherence_scene:
    case AnswerSchema::adherence_subject:
      instruction += "Reply with the JSON object only, using the keys shown in the prompt.";
      break;
    case AnswerSchema::grade03:
      instruction += "Reply with one line of the form 'Score: <0-3>'.";
      break;
    case AnswerSchema::dim_select:
      instruction += "Reply with the selected dimension numbers, e.g. '(1), (6)'.";
      break;
    case AnswerSchema::rating:
      instruction += "Reply with one of: Perfect, Good, Fair, Poor, Bad.";
      break;
  }
  ChatRequest again{&bundle, instruction, answer.raw_text};
  answer.reasked = true;
  answer.raw_text = send(again);
  try_parse(true);
  return answer;
}

std::set<Track2Dim> propose_track2_dims(const CaseManifest& c, const RunContext& ctx) {
  const auto bundle = render_prompt("causal_dim_select", c, -1, {});
  const auto ans = run_judge(bundle, ctx);
  if (ans.status != ParseStatus::ok) throw MalformedAnswer(c.case_id + ": dimension selection failed");
  return ans.dims;
}

}  // namespace wbench::judge
