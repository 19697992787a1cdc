#include "wbench/commands.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <semaphore>
#include <sstream>
#include <thread>

#include "wbench/digest.hpp"
#include "wbench/errors.hpp"
#include "wbench/evaluate.hpp"

namespace wbench {
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "wbench 0.1.0";

// Caps the number of judge requests in flight across worker threads.
class BoundedClient : public judge::JudgeClient {
 public:
  BoundedClient(judge::JudgeClient& inner, int limit) : inner_(inner), sem_(std::max(1, limit)) {}
  std::string complete(const judge::ChatRequest& req) override {
    sem_.acquire();
    try {
      auto r = inner_.complete(req);
      sem_.release();
      return r;
    } catch (...) {
      sem_.release();
      throw;
    }
  }
  std::string name() const override { return inner_.name(); }

 private:
  judge::JudgeClient& inner_;
  std::counting_semaphore<1024> sem_;
};

MetricConfig resolve_config(const RunConfig& rc) {
  nlohmann::json patch = nlohmann::json::object();
  if (!rc.config_file.empty()) {
    if (!fs::exists(rc.config_file)) throw ConfigError("config file not found: " + rc.config_file.string());
    try {
      patch = nlohmann::json::parse(read_file(rc.config_file));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file " + rc.config_file.string() + " is not valid JSON: " + e.what());
    }
  }
  if (!rc.overrides.is_null()) patch.merge_patch(rc.overrides);
  return config_with_overrides(patch);
}

nlohmann::json metric_list(const std::set<Metric>& ms) {
  auto j = nlohmann::json::array();
  for (Metric m : ms) j.push_back(metric_name(m));
  return j;
}

}  // namespace

JudgeMode judge_mode_from_string(const std::string& s) {
  if (s == "stub") return JudgeMode::stub;
  if (s == "endpoint") return JudgeMode::endpoint;
  if (s == "replay") return JudgeMode::replay;
  if (s == "none") return JudgeMode::none;
  throw ConfigError("unknown judge mode '" + s + "' (stub, endpoint, replay, none)");
}

std::set<Metric> select_metrics(const std::string& expr) {
  std::set<Metric> all(all_metrics().begin(), all_metrics().end());
  if (expr.empty()) return all;
  std::set<Metric> out;
  bool first = true;
  std::stringstream ss(expr);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    const bool remove = tok[0] == '-';
    if (remove) tok.erase(0, 1);
    // A selection that starts by removing begins from the full set.
    if (first && remove) out = all;
    first = false;
    std::set<Metric> group;
    if (tok == "all") {
      group = all;
    } else if (tok == "judge") {
      for (Metric m : all) {
        if (metric_uses_judge(m)) group.insert(m);
      }
    } else if (auto m = metric_from_name(tok)) {
      group.insert(*m);
    } else {
      bool found = false;
      for (auto d : kDimensions) {
        if (tok == dimension_name(d)) {
          found = true;
          for (Metric x : all) {
            if (metric_dimension(x) == d) group.insert(x);
          }
        }
      }
      if (!found) throw ConfigError("unknown metric or group '" + tok + "' in --metrics");
    }
    for (Metric m : group) {
      if (remove) {
        out.erase(m);
      } else {
        out.insert(m);
      }
    }
  }
  return out;
}

std::vector<ScoreCard> load_scorecards(const fs::path& run_dir) {
  const fs::path dir = run_dir / "scorecards";
  std::vector<ScoreCard> cards;
  if (!fs::is_directory(dir)) return cards;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      cards.push_back(scorecard_from_json(nlohmann::json::parse(read_file(f))));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(f.string() + ": " + e.what());
    }
  }
  return cards;
}

int cmd_run(const RunConfig& rc, std::ostream& log) {
  MetricConfig cfg;
  std::set<Metric> enabled;
  Benchmark cases;
  std::unique_ptr<judge::JudgeClient> client;
  try {
    cfg = resolve_config(rc);
    enabled = select_metrics(rc.metrics);
    if (rc.workers < 1) throw ConfigError("--workers must be at least 1");
    if (!fs::exists(rc.manifest)) throw ConfigError("manifest not found: " + rc.manifest.string());
    if (!fs::is_directory(rc.artifacts)) throw ConfigError("artifacts root not found: " + rc.artifacts.string());
    if (rc.out.empty()) throw ConfigError("--out is required");
    cases = split_track(load_manifest(rc.manifest.string()), rc.track);
    switch (rc.judge) {
      case JudgeMode::stub: client = std::make_unique<judge::StubJudge>(cfg.judge.stub_seed); break;
      case JudgeMode::endpoint:
        if (rc.endpoint_url.empty()) throw ConfigError("--endpoint-url is required with --judge endpoint");
        client = std::make_unique<judge::EndpointJudge>(rc.endpoint_url, cfg.judge.model);
        break;
      case JudgeMode::replay:
        client = std::make_unique<judge::ReplayJudge>(rc.replay_dir.empty() ? rc.out / "transcripts" : rc.replay_dir);
        break;
      case JudgeMode::none: break;
    }
    fs::create_directories(rc.out / "scorecards");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    log << "manifest error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SchemaError& e) {
    log << "manifest error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    log << "output error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::unique_ptr<BoundedClient> bounded;
  if (client) bounded = std::make_unique<BoundedClient>(*client, cfg.judge.max_in_flight);

  EvalOptions opt;
  opt.cfg = &cfg;
  opt.enabled = enabled;
  opt.client = bounded.get();
  opt.transcript_dir = client && rc.judge != JudgeMode::replay ? rc.out / "transcripts" : fs::path();
  opt.sleep = rc.sleep;
  opt.model_id = rc.model_id;

  std::vector<ScoreCard> cards(cases.size());
  std::vector<std::string> failures(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      try {
        cards[i] = evaluate_case(cases[i], inspect_sidecars(cases[i].case_id, rc.artifacts), opt);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const int nthreads = std::min<int>(rc.workers, std::max<std::size_t>(1, cases.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = kExitOk;
  bool transport = false, invalid = false;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (!failures[i].empty()) {
      log << cases[i].case_id << ": evaluation failed: " << failures[i] << '\n';
      invalid = true;
      continue;
    }
    const auto& c = cards[i];
    for (const auto& issue : c.validity.issues) {
      log << c.case_id << ": " << issue.role << " (" << issue.kind << "): " << issue.message << '\n';
    }
    invalid = invalid || c.validity.hard_failure();
    transport = transport || c.validity.transport_failure;
    write_file(rc.out / "scorecards" / (c.case_id + ".json"), dump_scorecard(c));
  }
  if (invalid) {
    code = kExitValidation;
  } else if (transport) {
    code = kExitTransport;
    log << "judge endpoint failed; affected metrics are excluded as judge_failed\n";
  }

  nlohmann::json run;
  run["tool"] = kToolVersion;
  run["model_id"] = rc.model_id;
  run["track"] = to_string(rc.track);
  run["manifest_sha256"] = sha256_hex(read_file(rc.manifest));
  run["cases"] = nlohmann::json::array();
  for (const auto& c : cases) run["cases"].push_back(c.case_id);
  run["judge"] = {{"mode", rc.judge == JudgeMode::stub       ? "stub"
                           : rc.judge == JudgeMode::endpoint ? "endpoint"
                           : rc.judge == JudgeMode::replay   ? "replay"
                                                             : "none"},
                  {"model", cfg.judge.model},
                  {"endpoint_url", rc.endpoint_url},
                  {"stub_seed", cfg.judge.stub_seed}};
  run["metric_config"] = cfg;
  run["config_digest"] = config_digest(cfg);
  run["overrides"] = rc.overrides;
  run["template_versions"] = judge::template_versions();
  run["metrics_enabled"] = metric_list(enabled);
  run["workers"] = rc.workers;
  run["exit_code"] = code;
  write_file(rc.out / "run.json", run.dump(2) + "\n");

  std::vector<ScoreCard> written;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (failures[i].empty()) written.push_back(cards[i]);
  }
  std::sort(written.begin(), written.end(), [](const auto& a, const auto& b) { return a.case_id < b.case_id; });
  nlohmann::json meta = {{"tool", kToolVersion},
                         {"track", to_string(rc.track)},
                         {"metric_config", cfg},
                         {"config_digest", config_digest(cfg)},
                         {"template_versions", judge::template_versions()}};
  const auto rep = report::build_report({{rc.model_id, written}}, rc.track, meta);
  report::emit_report(rep, rc.formats, rc.out);
  log << "scored " << written.size() << " case(s) into " << rc.out.string() << '\n';
  return code;
}

int cmd_validate(const fs::path& manifest, const fs::path& artifacts, std::ostream& out, nlohmann::json* summary) {
  Benchmark cases;
  try {
    cases = load_manifest(manifest.string());
  } catch (const Error& e) {
    out << "manifest error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (!fs::is_directory(artifacts)) {
    out << "artifacts root not found: " << artifacts.string() << '\n';
    return kExitConfig;
  }
  nlohmann::json all = nlohmann::json::array();
  int code = kExitOk;
  for (const auto& c : cases) {
    const auto ins = inspect_sidecars(c.case_id, artifacts);
    std::set<std::string> bad;
    for (const auto& i : ins.issues) bad.insert(i.role);
    std::set<std::string> missing(ins.bundle.missing.begin(), ins.bundle.missing.end());
    const bool broken = bad.count("meta") || bad.count("bundle");
    nlohmann::json excluded = nlohmann::json::object();
    for (Metric m : all_metrics()) {
      if (!metric_applicable(c, m)) continue;
      for (const auto& role : metric_inputs(m)) {
        if (broken) {
          excluded[std::string(metric_name(m))] = bad.count("bundle") ? "missing:bundle" : "invalid:meta";
        } else if (bad.count(role)) {
          excluded[std::string(metric_name(m))] = "invalid:" + role;
        } else if (missing.count(role)) {
          excluded[std::string(metric_name(m))] = "missing:" + role;
        } else {
          continue;
        }
        break;
      }
    }
    nlohmann::json issues = nlohmann::json::array();
    for (const auto& i : ins.issues) issues.push_back({{"role", i.role}, {"kind", i.kind}, {"message", i.message}});
    all.push_back({{"case_id", c.case_id},
                   {"issues", issues},
                   {"missing", std::vector<std::string>(missing.begin(), missing.end())},
                   {"excluded", excluded}});
    out << c.case_id << ": " << (ins.issues.empty() ? "ok" : std::to_string(ins.issues.size()) + " issue(s)") << '\n';
    for (const auto& i : ins.issues) {
      const char* err = i.kind == "length" ? "InconsistentLengthError" : "FormatError";
      out << "  " << err << " [" << i.role << "] " << i.message << '\n';
    }
    if (!missing.empty()) {
      out << "  missing:";
      for (const auto& m : missing) out << ' ' << m;
      out << '\n';
    }
    for (const auto& [m, why] : excluded.items()) out << "  would exclude " << m << " (" << why.get<std::string>() << ")\n";
    if (!ins.issues.empty()) code = kExitValidation;
  }
  if (summary) *summary = all;
  return code;
}

int cmd_report(const std::vector<fs::path>& run_dirs, const std::set<report::Format>& formats, const fs::path& out,
               const std::optional<fs::path>& votes_csv, std::ostream& log) {
  try {
    if (run_dirs.empty()) throw ConfigError("no run directory given");
    std::map<std::string, std::vector<ScoreCard>> by_model;
    std::optional<std::string> track, digest;
    nlohmann::json config;
    for (const auto& dir : run_dirs) {
      const fs::path run_json = dir / "run.json";
      if (!fs::exists(run_json)) throw ConfigError("no run.json in " + dir.string());
      const auto run = nlohmann::json::parse(read_file(run_json));
      const auto t = run.at("track").get<std::string>();
      const auto d = run.at("config_digest").get<std::string>();
      if (track && *track != t) throw ConfigError("runs use different tracks");
      if (digest && *digest != d) throw ConfigError("runs use different metric configs");
      track = t;
      digest = d;
      config = run.at("metric_config");
      auto cards = load_scorecards(dir);
      if (cards.empty()) throw ConfigError("no scorecards in " + dir.string());
      for (auto& c : cards) {
        auto& dst = by_model[c.model_id];
        for (const auto& have : dst) {
          if (have.case_id == c.case_id) throw ConfigError("case " + c.case_id + " scored twice for " + c.model_id);
        }
        dst.push_back(std::move(c));
      }
    }
    for (auto& [_, cards] : by_model) {
      std::sort(cards.begin(), cards.end(), [](const auto& a, const auto& b) { return a.case_id < b.case_id; });
    }
    std::optional<report::HumanPrefSet> prefs;
    if (votes_csv) {
      if (!fs::exists(*votes_csv)) throw ConfigError("votes file not found: " + votes_csv->string());
      prefs = report::human_win_rates(report::parse_votes_csv(read_file(*votes_csv)));
    }
    const Split split = *enum_from_string<Split>(*track);
    nlohmann::json meta = {{"tool", kToolVersion},
                           {"track", *track},
                           {"metric_config", config},
                           {"config_digest", *digest},
                           {"template_versions", judge::template_versions()}};
    const auto rep = report::build_report(by_model, split, meta, prefs);
    for (const auto& p : report::emit_report(rep, formats, out)) log << "wrote " << p.string() << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "report error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    log << "report error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    log << "report error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    log << "report error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int cmd_synth(const fs::path& manifest, const fs::path& artifacts, const synth::SynthOptions& opt, std::ostream& log) {
  Benchmark cases;
  try {
    cases = load_manifest(manifest.string());
  } catch (const Error& e) {
    log << "manifest error: " << e.what() << '\n';
    return kExitConfig;
  }
  for (const auto& c : cases) synth::write_bundle(c, opt, artifacts);
  log << "wrote " << cases.size() << " synthetic bundle(s) (" << synth::to_string(opt.mode) << ") to "
      << artifacts.string() << '\n';
  return kExitOk;
}

}  // namespace wbench
