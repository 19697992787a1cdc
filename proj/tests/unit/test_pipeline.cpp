#include <gtest/gtest.h>

#include <sstream>

#include "wbench/commands.hpp"
#include "wbench/errors.hpp"
#include "wbench/evaluate.hpp"
#include "wbench/sidecar.hpp"
#include "tempdir.hpp"

using namespace wbench;
using wbench::testing::fixture;
using wbench::testing::TempDir;
namespace fs = std::filesystem;

namespace {

fs::path synth_full(const TempDir& tmp, const std::string& manifest = "mini.manifest") {
  synth::SynthOptions opt;
  opt.full = true;
  opt.frames_per_turn = 10;
  std::ostringstream log;
  EXPECT_EQ(cmd_synth(fixture(manifest), tmp / "art", opt, log), kExitOk);
  return tmp / "art";
}

RunConfig run_config(const TempDir& tmp, const std::string& out, int workers = 1) {
  RunConfig rc;
  rc.manifest = fixture("mini.manifest");
  rc.artifacts = tmp / "art";
  rc.out = tmp / out;
  rc.workers = workers;
  rc.sleep = [](std::chrono::milliseconds) {};
  return rc;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return out;
}

}  // namespace

TEST(SelectMetrics, Expressions) {
  EXPECT_EQ(select_metrics("").size(), kMetricCount);
  EXPECT_EQ(select_metrics("navigation"), (std::set<Metric>{Metric::navigation}));
  const auto no_judge = select_metrics("-judge");
  for (auto m : no_judge) EXPECT_FALSE(metric_uses_judge(m));
  EXPECT_TRUE(no_judge.count(Metric::geometric_consistency));
  EXPECT_EQ(select_metrics("video_quality").size(), 6u);
  EXPECT_EQ(select_metrics("consistency,-segment_continuity").count(Metric::segment_continuity), 0u);
  EXPECT_THROW(select_metrics("bogus"), ConfigError);
}

TEST(Pipeline, RunScoresEveryApplicableMetric) {
  TempDir tmp;
  synth_full(tmp);
  std::ostringstream log;
  ASSERT_EQ(cmd_run(run_config(tmp, "run"), log), kExitOk) << log.str();
  const auto cards = load_scorecards(tmp / "run");
  ASSERT_EQ(cards.size(), 3u);
  for (const auto& c : cards) {
    EXPECT_EQ(c.metrics.size() + c.not_applicable.size(), kMetricCount) << c.case_id;
    for (const auto& [m, r] : c.metrics) {
      EXPECT_TRUE(r.value.has_value()) << c.case_id << " " << metric_name(m) << " " << r.reason;
    }
    if (c.in_nav_split) EXPECT_NEAR(*c.value(Metric::navigation), 100.0, 1e-6);
  }
  EXPECT_TRUE(fs::exists(tmp / "run" / "run.json"));
  EXPECT_TRUE(fs::exists(tmp / "run" / "report.txt"));
  EXPECT_TRUE(fs::exists(tmp / "run" / "transcripts" / "tpp_semantic.jsonl"));
  const auto meta = nlohmann::json::parse(read_file(tmp / "run" / "run.json"));
  EXPECT_EQ(meta["exit_code"], 0);
  EXPECT_EQ(meta["judge"]["mode"], "stub");
}

TEST(Pipeline, ByteIdenticalAcrossRunsAndWorkers) {
  TempDir tmp;
  synth_full(tmp);
  std::ostringstream log;
  ASSERT_EQ(cmd_run(run_config(tmp, "w1"), log), kExitOk);
  ASSERT_EQ(cmd_run(run_config(tmp, "w8", 8), log), kExitOk);
  ASSERT_EQ(cmd_run(run_config(tmp, "w1b"), log), kExitOk);
  const auto a = tree(tmp / "w1");
  auto b = tree(tmp / "w8");
  EXPECT_EQ(tree(tmp / "w1b"), a);
  // run.json records the worker count; everything else must match.
  b.erase("run.json");
  auto a2 = a;
  a2.erase("run.json");
  EXPECT_EQ(a2, b);
}

TEST(Pipeline, DenyListingJudgeMetrics) {
  TempDir tmp;
  synth_full(tmp);
  auto rc = run_config(tmp, "run");
  rc.metrics = "-judge";
  rc.judge = JudgeMode::none;
  std::ostringstream log;
  ASSERT_EQ(cmd_run(rc, log), kExitOk);
  for (const auto& c : load_scorecards(tmp / "run")) {
    for (const auto& [m, r] : c.metrics) {
      if (metric_uses_judge(m)) {
        EXPECT_EQ(r.reason, "disabled");
      } else {
        EXPECT_TRUE(r.value.has_value()) << metric_name(m);
      }
    }
  }
}

TEST(Pipeline, ReplayReproducesScores) {
  TempDir tmp;
  synth_full(tmp);
  std::ostringstream log;
  ASSERT_EQ(cmd_run(run_config(tmp, "live"), log), kExitOk);
  auto rc = run_config(tmp, "replayed");
  rc.judge = JudgeMode::replay;
  rc.replay_dir = tmp / "live" / "transcripts";
  ASSERT_EQ(cmd_run(rc, log), kExitOk);
  const auto a = tree(tmp / "live" / "scorecards");
  EXPECT_EQ(tree(tmp / "replayed" / "scorecards"), a);
}

TEST(Pipeline, MissingPosesExcludeNavAndSpatial) {
  TempDir tmp;
  const auto art = synth_full(tmp);
  fs::remove(art / "fpp_roundtrip" / "poses.txt");
  std::ostringstream log;
  ASSERT_EQ(cmd_run(run_config(tmp, "run"), log), kExitOk);
  for (const auto& c : load_scorecards(tmp / "run")) {
    if (c.case_id != "fpp_roundtrip") continue;
    EXPECT_EQ(c.metrics.at(Metric::navigation).reason, "missing:poses");
    EXPECT_EQ(c.metrics.at(Metric::spatial_consistency).reason, "missing:poses");
    EXPECT_EQ(c.metrics.at(Metric::geometric_consistency).reason, "missing:poses");
    EXPECT_TRUE(c.value(Metric::aesthetic_quality).has_value());
  }
}

TEST(Pipeline, CorruptSidecarIsValidationFailure) {
  TempDir tmp;
  const auto art = synth_full(tmp);
  const auto depth = read_file(art / "tpp_orbit" / "depth.bin");
  write_file(art / "tpp_orbit" / "depth.bin", depth.substr(0, depth.size() / 2 + 1));
  std::ostringstream out;
  nlohmann::json summary;
  EXPECT_EQ(cmd_validate(fixture("mini.manifest"), art, out, &summary), kExitValidation);
  EXPECT_NE(out.str().find("FormatError"), std::string::npos) << out.str();
  std::ostringstream log;
  EXPECT_EQ(cmd_run(run_config(tmp, "run"), log), kExitValidation);
  for (const auto& c : load_scorecards(tmp / "run")) {
    if (c.case_id == "tpp_orbit") {
      EXPECT_TRUE(c.validity.hard_failure());
      EXPECT_EQ(c.metrics.at(Metric::geometric_consistency).reason, "invalid:depth");
      EXPECT_TRUE(c.value(Metric::navigation).has_value());
    }
  }
}

TEST(Pipeline, ValidateCleanBundle) {
  TempDir tmp;
  const auto art = synth_full(tmp);
  std::ostringstream out;
  EXPECT_EQ(cmd_validate(fixture("mini.manifest"), art, out), kExitOk) << out.str();
  std::ostringstream out2;
  EXPECT_EQ(cmd_validate(fixture("trajectories.manifest"), synth_full(tmp, "trajectories.manifest"), out2), kExitOk);
}

TEST(Pipeline, ConfigErrors) {
  TempDir tmp;
  synth_full(tmp);
  std::ostringstream log;
  auto rc = run_config(tmp, "run");
  rc.artifacts = tmp / "nowhere";
  EXPECT_EQ(cmd_run(rc, log), kExitConfig);
  rc = run_config(tmp, "run");
  rc.manifest = tmp / "missing.manifest";
  EXPECT_EQ(cmd_run(rc, log), kExitConfig);
  rc = run_config(tmp, "run");
  rc.overrides = {{"nav", {{"K", 1}}}};
  EXPECT_EQ(cmd_run(rc, log), kExitConfig);
  rc = run_config(tmp, "run");
  rc.judge = JudgeMode::endpoint;
  EXPECT_EQ(cmd_run(rc, log), kExitConfig);
}

TEST(Pipeline, UnreachableJudgeIsTransportFailure) {
  TempDir tmp;
  synth_full(tmp);
  auto rc = run_config(tmp, "run");
  rc.judge = JudgeMode::endpoint;
  rc.endpoint_url = "http://127.0.0.1:9/v1/chat/completions";
  rc.metrics = "event_editing,navigation";
  std::ostringstream log;
  EXPECT_EQ(cmd_run(rc, log), kExitTransport);
  for (const auto& c : load_scorecards(tmp / "run")) {
    if (c.case_id == "tpp_semantic") {
      EXPECT_TRUE(c.validity.transport_failure);
      EXPECT_EQ(c.metrics.at(Metric::event_editing).reason, "judge_failed");
    } else {
      EXPECT_TRUE(c.value(Metric::navigation).has_value());
    }
  }
}

TEST(Pipeline, OverridesChangeDigest) {
  TempDir tmp;
  synth_full(tmp);
  std::ostringstream log;
  auto rc = run_config(tmp, "a");
  rc.metrics = "navigation";
  ASSERT_EQ(cmd_run(rc, log), kExitOk);
  rc.out = tmp / "b";
  rc.overrides = {{"nav", {{"K", 30}}}};
  ASSERT_EQ(cmd_run(rc, log), kExitOk);
  const auto a = load_scorecards(tmp / "a");
  const auto b = load_scorecards(tmp / "b");
  EXPECT_NE(a[0].config_digest, b[0].config_digest);
  std::ostringstream rlog;
  EXPECT_EQ(cmd_report({tmp / "a", tmp / "b"}, {report::Format::json}, tmp / "mixed", std::nullopt, rlog), kExitConfig);
}

TEST(Pipeline, ReportReproducesRunReport) {
  TempDir tmp;
  synth_full(tmp);
  std::ostringstream log;
  ASSERT_EQ(cmd_run(run_config(tmp, "run"), log), kExitOk);
  const std::set<report::Format> all = {report::Format::table, report::Format::csv, report::Format::json};
  ASSERT_EQ(cmd_report({tmp / "run"}, all, tmp / "rep", std::nullopt, log), kExitOk);
  for (const char* f : {"report.txt", "report.csv", "report.json"}) {
    EXPECT_EQ(read_file(tmp / "rep" / f), read_file(tmp / "run" / f)) << f;
  }
  ASSERT_EQ(cmd_report({tmp / "run"}, {report::Format::csv, report::Format::json}, tmp / "two", std::nullopt, log),
            kExitOk);
  int files = 0;
  for (const auto& e : fs::directory_iterator(tmp / "two")) files += e.is_regular_file();
  EXPECT_EQ(files, 2);
  fs::create_directories(tmp / "empty");
  EXPECT_NE(cmd_report({tmp / "empty"}, all, tmp / "x", std::nullopt, log), kExitOk);
}

TEST(Pipeline, ReportAcrossModelsWithVotes) {
  TempDir tmp;
  synth_full(tmp);
  std::ostringstream log;
  for (const char* m : {"alpha", "beta", "gamma"}) {
    auto rc = run_config(tmp, m);
    rc.model_id = m;
    ASSERT_EQ(cmd_run(rc, log), kExitOk);
  }
  write_file(tmp / "votes.csv",
             "aspect,model_a,model_b,winner\nnavigation,alpha,beta,a\nnavigation,beta,gamma,b\nnavigation,alpha,gamma,tie\n");
  ASSERT_EQ(cmd_report({tmp / "alpha", tmp / "beta", tmp / "gamma"}, {report::Format::json}, tmp / "cmp",
                       tmp / "votes.csv", log),
            kExitOk)
      << log.str();
  const auto j = nlohmann::json::parse(read_file(tmp / "cmp" / "report.json"));
  EXPECT_EQ(j["tables"].size(), 3u);
}

TEST(Pipeline, StaticSynthEngagesFallbacks) {
  TempDir tmp;
  synth::SynthOptions opt;
  opt.mode = synth::Mode::static_pose;
  std::ostringstream log;
  ASSERT_EQ(cmd_synth(fixture("mini.manifest"), tmp / "art", opt, log), kExitOk);
  auto rc = run_config(tmp, "run");
  rc.metrics = "navigation";
  ASSERT_EQ(cmd_run(rc, log), kExitOk);
  for (const auto& c : load_scorecards(tmp / "run")) {
    if (!c.in_nav_split) continue;
    const auto& turns = c.metrics.at(Metric::navigation).detail.at("turns");
    for (const auto& t : turns) EXPECT_TRUE(t["fallback_length"].get<bool>() || t["fallback_rotation"].get<bool>());
  }
}
