#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace wbench {

enum class Style { realistic, anime, cartoon, cg, oil_painting, ink_wash, pencil_sketch, flat };
enum class Perspective { first_person, third_person };
enum class SubjectCategory { human, animal, vehicle, robot, other };
enum class SceneCategory { nature, urban, indoor, works, fantasy, sports };
enum class TurnKind { navigation, subject_action, event_editing, perspective_switching };
enum class TrajectoryType { round_trip, progressive, repeat, l_shape, loop, zigzag };
enum class Track2Dim { fluid, collision, surface, deformation, wind, reflection, human_motion };
enum class TranslationKey { W, S, A, D };
enum class RotationKey { left, right, up, down };
enum class Split { nav, full };

std::string_view to_string(Style v);
std::string_view to_string(Perspective v);
std::string_view to_string(SubjectCategory v);
std::string_view to_string(SceneCategory v);
std::string_view to_string(TurnKind v);
std::string_view to_string(TrajectoryType v);
std::string_view to_string(Track2Dim v);
std::string_view to_string(TranslationKey v);
std::string_view to_string(RotationKey v);
std::string_view to_string(Split v);

/// Parses an enum from its canonical name; nullopt when unknown.
template <class E>
std::optional<E> enum_from_string(std::string_view s);

template <class E>
std::size_t enum_count();

struct ActionSpec {
  std::set<TranslationKey> translation_keys;
  std::set<RotationKey> rotation_keys;
  std::optional<std::string> instruction_text;
  std::optional<Perspective> switch_source;
  std::optional<Perspective> switch_target;

  bool is_pure_translation() const { return !translation_keys.empty() && rotation_keys.empty(); }
  bool is_pure_rotation() const { return translation_keys.empty() && !rotation_keys.empty(); }
  bool is_compound() const { return !translation_keys.empty() && !rotation_keys.empty(); }
  /// "W+left" style label for navigation actions, instruction text otherwise.
  std::string label() const;

  bool operator==(const ActionSpec&) const = default;
};

struct TurnSpec {
  int index = 0;
  TurnKind kind = TurnKind::navigation;
  ActionSpec action;

  bool operator==(const TurnSpec&) const = default;
};

struct CaseManifest {
  std::string case_id;
  std::string scene_text;
  Style style = Style::realistic;
  Perspective perspective = Perspective::first_person;
  std::optional<SubjectCategory> subject_category;
  SceneCategory scene_category = SceneCategory::nature;
  std::optional<TrajectoryType> trajectory;
  std::vector<TurnSpec> turns;
  std::string visible_part;
  std::string offscreen_part;
  std::optional<std::string> appearance_part;
  std::optional<std::string> action_part;
  std::optional<std::string> physics_rule;
  std::set<Track2Dim> track2_dims;
  bool in_nav_split = false;

  bool has_turn_kind(TurnKind k) const;
  bool operator==(const CaseManifest&) const = default;
};

using Benchmark = std::vector<CaseManifest>;

/// Parses manifest text. Throws ParseError on grammar violations and
/// SchemaError when a record breaks an invariant or a case_id repeats.
Benchmark parse_manifest(std::string_view text);
Benchmark load_manifest(const std::string& path);

/// Canonical text form; parse_manifest(serialize_manifest(b)) == b.
std::string serialize_manifest(const Benchmark& benchmark);

/// Throws SchemaError when the case breaks an invariant.
void validate_case(const CaseManifest& c);

Benchmark split_track(const Benchmark& benchmark, Split split);

/// Parses "W+left" style key sets; throws ParseError on unknown keys.
ActionSpec parse_navigation_keys(std::string_view text);

}  // namespace wbench
