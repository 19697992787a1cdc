#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wbench/config.hpp"
#include "wbench/manifest.hpp"
#include "wbench/sidecar.hpp"

namespace wbench::judge {

enum class AnswerSchema { binary, adherence_scene, adherence_subject, grade03, dim_select, rating };

struct Template {
  std::string id;  // name@version
  std::string system;
  std::string user;
  AnswerSchema schema = AnswerSchema::binary;
  int questions = 0;  // binary schema only
};

/// Looks a template up by bare name ("event_editing") or full id.
const Template& get_template(const std::string& name);
std::vector<std::string> template_names();
/// name -> id for every template, for run manifests.
std::map<std::string, std::string> template_versions();

struct DimInfo {
  const char* name;
  const char* description;
  const char* rubric;
};
/// Name, description and scoring rubric of a Track-2 dimension.
const DimInfo& dim_info(Track2Dim d);

struct Attachment {
  int frame = 0;
  std::string path;
};

struct PromptBundle {
  std::string template_id;
  std::string system_text;
  std::string user_text;
  std::vector<Attachment> frames;
  std::map<std::string, std::string> substitutions;

  /// Stable digest of the template id, texts and attached frame contents.
  /// Frame files are hashed by content so the digest ignores where the
  /// artifacts live.
  std::string digest() const;
};

/// Marker line inserted in the text for the k-th attachment (1-based).
std::string frame_marker(int k);

/// Replaces every [NAME] placeholder. Throws MissingFieldError for a
/// placeholder without substitution.
std::string fill_placeholders(const std::string& text, const std::map<std::string, std::string>& subs);

/// Frame indices in [range.begin, range.end) sampled at target_fps from a
/// video at source_fps.
std::vector<int> sample_frames(const TurnRange& range, double source_fps, double target_fps);

/// Human-readable instruction for a turn; navigation keys follow the
/// perspective's semantics ("Camera pushes forward").
std::string action_text(const CaseManifest& c, const TurnSpec& turn);

/// Renders a template for one turn of a case. `dim` selects the Track-2
/// dimension for the per-dimension template. Frames are attached in order.
PromptBundle render_prompt(const std::string& template_name, const CaseManifest& c, int turn,
                           const std::vector<Attachment>& frames,
                           std::optional<Track2Dim> dim = std::nullopt,
                           int persp_group_frames = 4);

enum class ParseStatus { ok, malformed };

struct AdherenceReply {
  int grade = 0;  // 1..5
  int flag = 0;   // 0 or 1
};

struct JudgeAnswer {
  std::string raw_text;
  ParseStatus status = ParseStatus::malformed;
  std::vector<bool> verdicts;  // Yes = true
  std::optional<AdherenceReply> adherence;
  std::optional<int> grade;
  std::set<Track2Dim> dims;
  std::string error;
  int attempts = 0;
  bool reasked = false;
};

/// Per-question Yes/No verdicts in question order. Throws MalformedAnswer.
std::vector<bool> parse_binary_answers(const std::string& raw, int expected_count);
/// Top-level JSON object with "maintenance" and `flag_key`. Throws MalformedAnswer.
AdherenceReply parse_adherence(const std::string& raw, const std::string& flag_key);
/// 0..3 grade. Throws MalformedAnswer.
int parse_grade03(const std::string& raw);
std::set<Track2Dim> parse_dim_selection(const std::string& raw);
/// Fills the schema fields of `answer` from raw_text according to the template.
void parse_answer(const Template& t, JudgeAnswer& answer);

// Scorers.
inline const std::vector<bool> kEventActionExpected = {false, true, true, true, false};
int score_event_or_action(const std::vector<bool>& answers,
                          const std::vector<bool>& expected = kEventActionExpected);
int score_persp_switch(const std::vector<bool>& answers);
/// Case score from per-turn grades: mean x 20 for event and action turns
/// (0..5), mean x 100 for perspective switches (0/1).
double score_interaction_case(TurnKind kind, const std::vector<int>& turn_scores);
double score_scene_adherence(int maintenance, int offscreen);
double score_subject_adherence(int appearance, int action);
/// Per-turn score in [0, 3]; track2 empty falls back to track1.
double causal_turn_score(int track1, const std::vector<int>& track2);
/// Mean of per-turn [0,3] scores, normalized to [0, 100].
double score_causal_fidelity(const std::vector<double>& turn_scores);
/// Expected rating over renormalized token masses, mapped to [0, 100].
std::optional<double> visual_plausibility_from_probs(const std::map<std::string, double>& probs);

struct ChatRequest {
  const PromptBundle* bundle = nullptr;
  // Follow-up user message for a structured re-ask; empty otherwise.
  std::string reask;
  // The reply being re-asked about.
  std::string previous;
};

class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  /// Returns the text completion. Throws TransportError.
  virtual std::string complete(const ChatRequest& req) = 0;
  virtual std::string name() const = 0;
};

/// Answers as a pure function of the seed and the bundle digest.
class StubJudge : public JudgeClient {
 public:
  explicit StubJudge(std::uint64_t seed) : seed_(seed) {}
  std::string complete(const ChatRequest& req) override;
  std::string name() const override { return "stub"; }

 private:
  std::uint64_t seed_;
};

/// Chat-completions style HTTP endpoint. The bearer token comes from the
/// WBENCH_JUDGE_API_KEY environment variable when set.
class EndpointJudge : public JudgeClient {
 public:
  EndpointJudge(std::string url, std::string model, std::chrono::seconds timeout = std::chrono::seconds(120));
  std::string complete(const ChatRequest& req) override;
  std::string name() const override { return "endpoint"; }
  /// Request body sent for a chat request.
  nlohmann::json request_body(const ChatRequest& req) const;

 private:
  std::string scheme_host_;
  std::string path_;
  std::string model_;
  std::chrono::seconds timeout_;
};

/// Replays answers recorded in transcript files, keyed by prompt digest.
class ReplayJudge : public JudgeClient {
 public:
  explicit ReplayJudge(const std::filesystem::path& transcript_dir);
  std::string complete(const ChatRequest& req) override;
  std::string name() const override { return "replay"; }

 private:
  std::map<std::pair<std::string, bool>, std::string> answers_;
};

/// Append-only JSON-lines transcript of one case's judge exchanges.
class Transcript {
 public:
  Transcript() = default;
  explicit Transcript(std::filesystem::path path) : path_(std::move(path)) {}
  void record(const nlohmann::json& entry);
  bool enabled() const { return !path_.empty(); }

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct RunContext {
  JudgeClient* client = nullptr;
  const JudgeConfig* cfg = nullptr;
  Transcript* transcript = nullptr;
  Sleeper sleep;  // defaults to std::this_thread::sleep_for
  std::string case_id;
  int turn = -1;
};

/// Sends the bundle with transport retries and backoff, parses the reply, and
/// re-asks once on a malformed reply. Throws TransportError when every attempt
/// fails; a reply still malformed after the re-ask comes back with
/// status malformed.
JudgeAnswer run_judge(const PromptBundle& bundle, const RunContext& ctx);

/// Offline helper proposing Track-2 dimensions for a new case from its text.
std::set<Track2Dim> propose_track2_dims(const CaseManifest& c, const RunContext& ctx);

}  // namespace wbench::judge
