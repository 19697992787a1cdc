#include <array>
#include <map>
#include <string>

#include "wbench/errors.hpp"
#include "wbench/judge.hpp"

namespace wbench::judge {
namespace {

const char* kSceneAdherence = R"(You are a video analysis expert. You will see video frames from Turn 1 of a generated video (sampled at 2fps).

Evaluate the video on two aspects:

**1. Environment Maintenance (1-5)**
How well does the video maintain these scene elements that were visible in the initial frame? Also consider whether the visual style remains consistent.
Scene description: [VISIBLE_PART]
Visual style: [STYLE]

Scoring:
- 5: All elements perfectly maintained, style fully consistent
- 4: Most elements maintained, style mostly consistent, minor issues
- 3: Some elements maintained or style partially drifts
- 2: Few elements maintained, significant changes or style mismatch
- 1: Scene barely matches the description or style completely wrong

**2. Offscreen Content Appearance (0 or 1)**
The following elements were described as existing OFF-SCREEN (not visible in the initial frame). Did ANY of them appear in the video as the camera moved?
Description: [OFFSCREEN_PART]

- 1: At least one offscreen element appeared
- 0: None of the offscreen elements appeared

Answer in JSON format ONLY. Each reason must be within 20 words.
{"maintenance": <1-5>, "maintenance_reason": "...", "offscreen": <0 or 1>, "offscreen_reason": "..."})";

const char* kSubjectAdherence = R"(You are a video analysis expert. You will see video frames from Turn 1 of a generated video (sampled at 2fps).

Evaluate the video on two aspects:

**1. Subject Appearance Maintenance (1-5)**
How well does the video maintain the subject's visual appearance (shape, color, clothing, equipment, category)?
Subject appearance: [APPEARANCE_PART]

Scoring:
- 5: Subject appearance perfectly maintained throughout
- 4: Mostly maintained, minor visual changes
- 3: Some features maintained, noticeable changes
- 2: Few features maintained, significant appearance drift
- 1: Subject barely recognizable or completely changed

**2. Subject Action (0 or 1)**
Does the subject exhibit the described movement/action pattern in the video?
Expected action: [ACTION_PART]

- 1: The described action/movement pattern is clearly visible
- 0: The action/movement pattern is not visible or completely different

Answer in JSON format ONLY. Each reason must be within 20 words.
{"maintenance": <1-5>, "maintenance_reason": "...", "action": <0 or 1>, "action_reason": "..."})";

const char* kEventActionSystem = R"(You are evaluating AI-generated video segments from interactive world models. Each video segment corresponds to one interaction turn where a specific event was instructed to happen.

Your task: answer with ONLY 'Yes' or 'No' based on what you observe in the provided frames. Follow these guidelines:
- These are AI-generated videos, not real footage. Minor visual artifacts, slight inconsistencies, or imperfect rendering should NOT cause a 'No' if the overall intent is recognizable.
- Focus on whether the CORE semantic meaning of the described event is visually present, not whether every literal detail matches perfectly.
- A long or detailed event description may only be partially depicted. Judge based on whether the main action or change is recognizable.
- When in doubt between Yes and No, lean toward the interpretation that better matches what you actually see, not what you expect to see.)";

const char* kEventEditing = R"(World setting: [SCENE_DESCRIPTION]
Interaction instruction for this turn: [ACTION]

The following frames are uniformly sampled from the generated video segment for this turn.
[FRAME_SEQUENCE]

Q1 (Static Scene Check): Does the scene remain largely unchanged, with no clear indication of '[ACTION]' occurring? Answer No if there is ANY recognizable change related to this event. Expected: No.
Q2 (Event Occurrence): Does the video show something resembling or consistent with the described event '[ACTION]'? Partial depiction counts as Yes. Expected: Yes.
Q3 (Event Completion): By the end of this segment, has the described event '[ACTION]' reached a clear conclusion or outcome? Ongoing events without a visible end state receive No. Expected: Yes.
Q4 (Detail Accuracy): Are the key details of '[ACTION]' accurately depicted, such as the correct objects, agents, directions, and quantities? Expected: Yes.
Q5 (Anomaly Absence): Does any unexpected object, entity, or visual anomaly unrelated to '[ACTION]' appear in this segment? Natural consequences of the event and minor AI rendering artifacts do not count. Expected: No.)";

const char* kSubjectAction = R"(World setting: [SCENE_DESCRIPTION]
Interaction instruction for this turn: [ACTION]

The following frames are uniformly sampled from the generated video segment for this turn.
[FRAME_SEQUENCE]

Q1 (Idle Subject Check): Does the subject remain idle or stationary, with no attempt to perform '[ACTION]'? Answer No if the subject shows ANY movement or gesture related to this action. Expected: No.
Q2 (Action Occurrence): Does the video show the subject performing something resembling or consistent with '[ACTION]'? Partial execution counts as Yes. Expected: Yes.
Q3 (Action Completion): By the end of this segment, has the subject's action '[ACTION]' reached a clear conclusion or outcome? Expected: Yes.
Q4 (Detail Accuracy): Are the key details of '[ACTION]' accurately depicted, such as the correct subject, target objects, and manner of the action? Expected: Yes.
Q5 (Unnatural Motion Check): Does the subject exhibit any unnatural body movement, impossible pose, or physically implausible interaction while performing '[ACTION]'? Only clearly unnatural movements or impossible poses count; slight jitter or minor hand artifacts do not. Expected: No.)";

const char* kPerspSystem =
    "You are a precise video evaluator. You will be given frames from the beginning and end of a "
    "generated video turn and a perspective-switching instruction. Answer each question with Yes or "
    "No only.";

const char* kPersp = R"(Perspective switching instruction: [SWITCH_INSTRUCTION]
(e.g., "Switch from first-person to third-person view following the character")
Source perspective: [SOURCE_PERSPECTIVE] (first-person / third-person)
Target perspective: [TARGET_PERSPECTIVE] (first-person / third-person)

Early frames (beginning of the turn segment):
[EARLY_FRAME_SEQUENCE]
Late frames (end of the turn segment):
[LATE_FRAME_SEQUENCE]

Answer each question with Yes or No only.

Q1 (Transition Visibility): Can a clear change in perspective be observed between the early and late frames?
Q2 (Target Consistency): Does the late-frame perspective match the target perspective ([TARGET_PERSPECTIVE])?
Q3 (Quality Compliance): Does the new perspective satisfy expected structural properties? For third-person, is the subject centered with a following camera? For first-person, are there no self-view artifacts?)";

const char* kTrack1System = R"(You are evaluating the RENDERING-LEVEL visual plausibility and causal consistency of an AI-generated video segment. You will be shown a sequence of frames in temporal order.

IMPORTANT RULES:
- Do NOT judge whether depicted actions are possible in the real world. Fantasy / sci-fi elements are acceptable if the setting calls for them.
- Do NOT penalize camera behaviour (tilting, shaking, panning, zooming, rotation). Camera motion is a cinematography choice, NOT a physics issue of the world.
- ONLY evaluate the physics of OBJECTS and CHARACTERS within the scene.

Before scoring, mentally scan the frames for notable events, unexplained appearances / disappearances, and whether every visible effect has a plausible cause and every depicted action produces its expected consequences.

Evaluate the following aspects:
A. Rendering physics. (1) solid-body integrity, (2) consistent gravity, (3) motion continuity, (4) object permanence, (5) natural deformation, (6) character physics.
B. Causal consistency. (7) no effect without cause (for non-instructed changes), (8) no cause without effect (the instructed action must produce its consequences), (9) no unrelated objects or effects appearing from nothing. The instructed action and its direct consequences are EXPECTED changes and must NOT be penalised.)";

const char* kTrack1 = R"(Scene context: [SCENE_DESC]
The instructed action for this segment is: '[ACTION]'.
Special physics rule: [RULE_DESC]

[FRAME_SEQUENCE]

First, note any notable events, state changes, or objects appearing / disappearing across the frames. Then rate the overall rendering physics AND causal consistency of this segment from 0 to 3:
  3 - Good: physics and causality are natural and consistent, no significant artifacts or causal errors.
  2 - Fair: noticeable problems such as some clipping, jerky motion, or 1-2 causal errors, but main actions still make sense.
  1 - Poor: multiple physics violations and / or causal breakdowns, objects appear from nowhere, frequent clipping, missing consequences.
  0 - Failure: physics and causality are mostly or completely broken.)";

const char* kDimSelectSystem =
    "You are a physics evaluation assistant for AI-generated videos. Given scene context, "
    "environment details, and an action description, identify which specific physics phenomena are "
    "relevant and should be evaluated. Consider BOTH the action AND the environment, for example "
    "rain implies fluid / reflection, snow implies surface tracks, wind implies environmental "
    "forces. Select only dimensions that are clearly relevant, but do not miss obvious ones.";

const char* kDimSelect = R"(Scene description: [SCENE_DESCRIPTION]
Interaction sequence: [FULL_INTERACTION_SEQUENCE]
Environment details: [ENV_DETAILS]

Select ALL applicable dimensions from:
(1) Fluid & Smoke: liquids, smoke, fire, steam, and underwater behaviour (buoyancy, bubbles, drifting).
(2) Collision & Clipping: objects or characters physically colliding, striking, pushing, or overlapping. Do NOT select for scenes without physical contact.
(3) Surface Tracks & Imprints: movement over soft, deformable surfaces (snow, sand, mud, wet ground, dust). Do NOT select for hard surfaces.
(4) Deformation & Destruction: breaking, shattering, crumbling, tearing, or bending, including explosion debris.
(5) Wind & Environmental Forces: wind acting on hair, cloth, leaves, particles; currents and air resistance.
(6) Reflection & Lighting: water / mirror reflections, explicit point lights, directional shadows, metallic / glass reflections, or fire / lava illumination.
(7) Human Motion & Expression: clearly visible human or humanoid figures whose body motion and face coherence can be judged across frames.)";

const char* kTrack2System =
    "You are evaluating a specific physics phenomenon in an AI-generated video segment. Score based "
    "ONLY on the specified physics dimension, not on overall video quality. These are AI-generated "
    "videos; minor rendering artifacts are acceptable. Focus on whether the specific physical "
    "behaviour is plausible.";

const char* kTrack2 = R"(World setting: [SCENE_DESCRIPTION]

[FRAME_SEQUENCE]

Evaluate dimension [DIM_ID]: [DIM_NAME].
Description: [DIM_DESCRIPTION]
[DIM_SCORING_PROMPT])";

const char* kVisualPlausibility =
    "Suppose you are an expert in judging and evaluating the quality of AI-generated videos, please "
    "watch the above provided video and give scores for the video's truthfulness and rationality, "
    "i.e., whether the video's overall appearance and motion are consistent with our common-sense "
    "and physical principles.\n\nYour rating should be chosen from the following five categories: "
    "Perfect, Good, Fair, Poor, and Bad. Now please rate this video:";

const std::map<std::string, Template>& registry() {
  static const std::map<std::string, Template> r = [] {
    std::map<std::string, Template> m;
    auto add = [&](std::string name, const char* sys, const char* user, AnswerSchema s, int q = 0) {
      m.emplace(name, Template{name + "@1", sys, user, s, q});
    };
    add("scene_adherence", "", kSceneAdherence, AnswerSchema::adherence_scene);
    add("subject_adherence", "", kSubjectAdherence, AnswerSchema::adherence_subject);
    add("event_editing", kEventActionSystem, kEventEditing, AnswerSchema::binary, 5);
    add("subject_action", kEventActionSystem, kSubjectAction, AnswerSchema::binary, 5);
    add("perspective_switching", kPerspSystem, kPersp, AnswerSchema::binary, 3);
    add("causal_track1", kTrack1System, kTrack1, AnswerSchema::grade03);
    add("causal_dim_select", kDimSelectSystem, kDimSelect, AnswerSchema::dim_select);
    add("causal_track2", kTrack2System, kTrack2, AnswerSchema::grade03);
    add("visual_plausibility", "", kVisualPlausibility, AnswerSchema::rating);
    return m;
  }();
  return r;
}

}  // namespace

namespace {

const std::array<DimInfo, 7> kDims = {{
    {"Fluid & Smoke",
     "liquids, smoke, fire, steam, and underwater behaviour (buoyancy, bubbles, drifting).",
     R"(Rate fluid, smoke, and related effects (0-3).
3 = Realistic flow, splash, smoke rise, underwater drift.
2 = Minor artifacts but behaviour is recognisable.
1 = Notable issues: liquid defies gravity, smoke static, no bubbles.
0 = Fluid / smoke behaviour completely unrealistic or absent, or completely unrealistic.)"},
    {"Collision & Clipping",
     "objects or characters physically colliding, striking, pushing, or overlapping.",
     R"(Rate collision and solid-body integrity (0-3). ONLY evaluate collisions / contacts that actually occur.
3 = All contacts are natural, no clipping or pass-through.
2 = Minor clipping but mostly plausible contacts.
1 = Obvious clipping: limbs pass through objects or surfaces.
0 = Severe clipping, objects completely ignore each other.)"},
    {"Surface Tracks & Imprints",
     "movement over soft, deformable surfaces (snow, sand, mud, wet ground, dust).",
     R"(Rate surface interaction and imprint accuracy (0-3).
3 = Clear, appropriate marks visible (footprints in snow, tracks in sand).
2 = Some marks visible but incomplete or inconsistent.
1 = No marks visible on a surface that should clearly show them.
0 = Surface shows no response at all to contact.)"},
    {"Deformation & Destruction",
     "breaking, shattering, crumbling, tearing, or bending, including explosion debris.",
     R"(Rate deformation and destruction effects (0-3).
3 = Realistic shattering, crumbling, bending, debris scatter.
2 = Minor issues but deformation is recognisable.
1 = Deformation clearly unnatural or inconsistent.
0 = No deformation when expected, or completely unrealistic.)"},
    {"Wind & Environmental Forces",
     "wind acting on hair, cloth, leaves, particles; currents and air resistance.",
     R"(Rate wind and environmental force effects (0-3).
3 = Natural swaying, drifting, fluttering of affected objects.
2 = Minor issues but environmental effects are recognisable.
1 = Effects are stiff, static, or inconsistent with the scene.
0 = No environmental effects visible when expected.)"},
    {"Reflection & Lighting",
     "water / mirror reflections, explicit point lights, directional shadows, metallic / glass "
     "reflections, or fire / lava illumination.",
     R"(Rate the accuracy of SPECIAL reflection and lighting effects (0-3). Evaluate ONLY optical effects that are actually VISIBLE in the video; do NOT penalise for effects that are absent from the scene.
Check for:
- Water / mirror reflections: do they match the shape and motion of the source?
- Point light sources: is the illumination range and falloff plausible?
- Shadows: do they point in the correct direction relative to the light?
- Metallic / glass surfaces: do they show plausible environment reflections?

3 = All visible optical effects are accurate and physically consistent.
2 = Minor errors in one effect (e.g. reflection slightly misaligned).
1 = Clear errors: reflections show wrong content, shadows point wrong way, or lighting does not respond to scene changes.
0 = Optical effects are completely wrong or absent when clearly expected.)"},
    {"Human Motion & Expression",
     "clearly visible human or humanoid figures whose body motion and face coherence can be "
     "judged across frames.",
     R"(Rate human motion naturalness and facial expression quality (0-3). Focus on MOVEMENT ACROSS FRAMES, not just single-frame anatomy:
- Does the character move fluidly between poses, or jerk / teleport?
- Are body movements biomechanically plausible (natural gait, realistic reach, believable weight shifts)?
- Do limbs move in coordinated, purposeful ways, or flail randomly?
- Is the face coherent (no melting, distortion, or uncanny shifts)?
Minor structural issues (slight hand distortion, brief extra finger) should NOT heavily impact the score if overall motion is natural.

3 = Smooth, natural human motion throughout; face is coherent.
2 = Mostly natural motion with minor stiffness or brief glitches.
1 = Clearly unnatural: jerky limbs, puppet-like movement, frozen poses, or obvious face distortion.
0 = Severely broken: limbs flail impossibly, body contorts unnaturally, face melts or deforms grotesquely.)"},
}};

}  // namespace

const DimInfo& dim_info(Track2Dim d) { return kDims.at(static_cast<std::size_t>(d)); }

const Template& get_template(const std::string& name) {
  const auto& r = registry();
  const auto at = name.find('@');
  auto it = r.find(at == std::string::npos ? name : name.substr(0, at));
  if (it == r.end() || (at != std::string::npos && it->second.id != name)) {
    throw MissingFieldError("unknown template '" + name + "'");
  }
  return it->second;
}

std::vector<std::string> template_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : registry()) out.push_back(k);
  return out;
}

std::map<std::string, std::string> template_versions() {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : registry()) out[k] = v.id;
  return out;
}

}  // namespace wbench::judge
