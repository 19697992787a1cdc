#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wbench/commands.hpp"
#include "wbench/errors.hpp"

namespace {

std::set<wbench::report::Format> parse_formats(const std::vector<std::string>& names) {
  std::set<wbench::report::Format> out;
  for (const auto& n : names) out.insert(wbench::report::format_from_string(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"World-model evaluation engine"};
  app.require_subcommand(1);

  wbench::RunConfig rc;
  std::string track = "full", judge = "stub", overrides;
  std::vector<std::string> formats = {"txt", "csv", "json"};
  auto* run = app.add_subcommand("run", "Score every case of a manifest");
  run->add_option("--manifest", rc.manifest, "Case manifest")->required();
  run->add_option("--artifacts", rc.artifacts, "Sidecar root (one directory per case)")->required();
  run->add_option("--out", rc.out, "Output directory")->required();
  run->add_option("--track", track, "nav or full")->check(CLI::IsMember({"nav", "full"}));
  run->add_option("--judge", judge, "stub, endpoint, replay or none")
      ->check(CLI::IsMember({"stub", "endpoint", "replay", "none"}));
  run->add_option("--endpoint-url", rc.endpoint_url, "Chat-completions URL for --judge endpoint");
  run->add_option("--replay-dir", rc.replay_dir, "Transcript directory for --judge replay");
  run->add_option("--workers", rc.workers, "Cases evaluated in parallel")->check(CLI::PositiveNumber);
  run->add_option("--metrics", rc.metrics, "Metric selection, e.g. 'all,-judge' or 'consistency'");
  run->add_option("--config", rc.config_file, "JSON file of metric-config overrides");
  run->add_option("--set", overrides, "Inline JSON overrides applied after --config");
  run->add_option("--model", rc.model_id, "Identifier of the evaluated model");
  run->add_option("--formats", formats, "Report formats: txt csv json")->delimiter(',');

  std::string v_manifest, v_artifacts;
  auto* validate = app.add_subcommand("validate", "Check sidecars against the interchange formats");
  validate->add_option("--manifest", v_manifest)->required();
  validate->add_option("--artifacts", v_artifacts)->required();

  std::vector<std::string> r_runs;
  std::string r_out, r_votes;
  std::vector<std::string> r_formats = {"txt", "csv", "json"};
  auto* rep = app.add_subcommand("report", "Rebuild reports from scored runs");
  rep->add_option("--scorecards", r_runs, "Run directories (one per model)")->required();
  rep->add_option("--out", r_out, "Report directory")->required();
  rep->add_option("--formats", r_formats, "txt csv json")->delimiter(',');
  rep->add_option("--human-votes", r_votes, "CSV of pairwise human votes");

  std::string s_manifest, s_out, s_mode = "perfect";
  wbench::synth::SynthOptions so;
  auto* syn = app.add_subcommand("synth", "Write synthetic sidecar bundles");
  syn->add_option("--manifest", s_manifest)->required();
  syn->add_option("--out", s_out, "Artifacts root to write")->required();
  syn->add_option("--mode", s_mode)->check(CLI::IsMember({"perfect", "reversed_rotation", "static"}));
  syn->add_option("--noise-t", so.sigma_t, "Translation noise sigma");
  syn->add_option("--noise-r", so.sigma_r, "Rotation noise sigma (radians)");
  syn->add_option("--seed", so.seed);
  syn->add_option("--frames-per-turn", so.frames_per_turn);
  syn->add_flag("--full", so.full, "Also write frames, depth, masks, embeddings and scalars");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : wbench::kExitConfig;
  }

  try {
    if (*run) {
      rc.track = track == "nav" ? wbench::Split::nav : wbench::Split::full;
      rc.judge = wbench::judge_mode_from_string(judge);
      if (!overrides.empty()) rc.overrides = nlohmann::json::parse(overrides);
      rc.formats = parse_formats(formats);
      return wbench::cmd_run(rc, std::cerr);
    }
    if (*validate) return wbench::cmd_validate(v_manifest, v_artifacts, std::cout);
    if (*rep) {
      std::vector<std::filesystem::path> dirs(r_runs.begin(), r_runs.end());
      std::optional<std::filesystem::path> votes;
      if (!r_votes.empty()) votes = r_votes;
      return wbench::cmd_report(dirs, parse_formats(r_formats), r_out, votes, std::cerr);
    }
    if (*syn) {
      so.mode = wbench::synth::mode_from_string(s_mode);
      return wbench::cmd_synth(s_manifest, s_out, so, std::cerr);
    }
  } catch (const wbench::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return wbench::kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return wbench::kExitConfig;
  }
  return wbench::kExitOk;
}
