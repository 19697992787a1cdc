#include "wbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "wbench/errors.hpp"
#include "wbench/sidecar.hpp"

namespace wbench::report {
namespace {

// Order-independent mean: summing sorted values makes the result invariant
// to case order bit for bit.
std::optional<double> mean_of(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string fixed(std::optional<double> v, int decimals) {
  if (!v || !std::isfinite(*v)) return "--";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
  std::string s = buf;
  // Keep "-0.0" out of the output.
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

nlohmann::json rounded(std::optional<double> v, int decimals) {
  if (!v || !std::isfinite(*v)) return nullptr;
  const double p = std::pow(10.0, decimals);
  double r = std::round(*v * p) / p;
  if (r == 0) r = 0;  // drop the sign of zero
  return r;
}

std::optional<double> case_dimension(const ScoreCard& c, Dimension d) {
  std::vector<double> v;
  for (const auto& [m, r] : c.metrics) {
    if (metric_dimension(m) == d && r.value) v.push_back(*r.value);
  }
  return mean_of(v);
}

std::optional<std::string> setting_of(const ScoreCard& c, SettingAxis axis) {
  switch (axis) {
    case SettingAxis::perspective:
      return std::string(to_string(c.perspective));
    case SettingAxis::scene:
      return std::string(to_string(c.scene_category));
    case SettingAxis::subject:
      if (!c.subject_category) return std::nullopt;
      return std::string(to_string(*c.subject_category));
  }
  return std::nullopt;
}

const char* kBucketNames[4] = {"T1", "T2", "T3", "T4+"};

std::optional<double> table_column(const ModelTable& t, const std::string& aspect) {
  for (auto d : kDimensions) {
    if (aspect == dimension_name(d)) {
      auto it = t.dims.find(d);
      return it == t.dims.end() ? std::nullopt : it->second;
    }
  }
  if (auto m = metric_from_name(aspect)) {
    auto it = t.metrics.find(*m);
    return it == t.metrics.end() ? std::nullopt : it->second.mean;
  }
  return std::nullopt;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }
std::string lpad(const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

ModelTable aggregate_model(const std::vector<ScoreCard>& cards, Split track, const std::string& model_id) {
  ModelTable t;
  t.track = track;
  t.model_id = model_id;
  std::map<Metric, std::vector<double>> values;
  for (const auto& c : cards) {
    if (track == Split::nav && !c.in_nav_split) continue;
    if (t.model_id.empty()) t.model_id = c.model_id;
    ++t.cases;
    for (const auto& [m, r] : c.metrics) {
      auto& agg = t.metrics[m];
      if (r.value) {
        values[m].push_back(*r.value);
        ++agg.n;
      } else {
        ++agg.excluded;
      }
    }
  }
  for (auto& [m, agg] : t.metrics) agg.mean = mean_of(values[m]);
  for (auto d : kDimensions) {
    std::vector<double> means;
    for (const auto& [m, agg] : t.metrics) {
      if (metric_dimension(m) == d && agg.mean) means.push_back(*agg.mean);
    }
    t.dims[d] = mean_of(means);
  }
  return t;
}

Degradation turn_degradation(const std::vector<ScoreCard>& cards) {
  std::map<std::string, std::array<std::vector<double>, 4>> pooled;
  for (const auto& c : cards) {
    for (const auto& t : c.turns) {
      if (!t.score) continue;
      if (t.metric != Metric::navigation && t.metric != Metric::event_editing &&
          t.metric != Metric::subject_action && t.metric != Metric::perspective_switching) {
        continue;
      }
      const int bucket = std::min(t.turn, 3);
      pooled[std::string(to_string(t.kind))][bucket].push_back(*t.score);
    }
  }
  Degradation out;
  for (auto& [series, buckets] : pooled) {
    auto& dst = out[series];
    for (int b = 0; b < 4; ++b) dst[b] = {mean_of(buckets[b]), static_cast<int>(buckets[b].size())};
  }
  std::array<Bucket, 4> semantic{};
  bool any = false;
  for (int b = 0; b < 4; ++b) {
    std::vector<double> means;
    int n = 0;
    for (const char* s : {"event_editing", "subject_action", "perspective_switching"}) {
      auto it = out.find(s);
      if (it != out.end() && it->second[b].mean) {
        means.push_back(*it->second[b].mean);
        n += it->second[b].n;
      }
    }
    semantic[b] = {mean_of(means), n};
    any = any || !means.empty();
  }
  if (any) out["semantic"] = semantic;
  return out;
}

std::string_view to_string(SettingAxis a) {
  switch (a) {
    case SettingAxis::perspective: return "perspective";
    case SettingAxis::scene: return "scene";
    case SettingAxis::subject: return "subject";
  }
  return "";
}

ZTable setting_zscores(const std::vector<ScoreCard>& cards, SettingAxis axis) {
  ZTable out;
  out.axis = axis;
  std::map<std::string, std::map<Dimension, std::vector<double>>> by_setting;
  for (const auto& c : cards) {
    const auto s = setting_of(c, axis);
    if (!s) continue;
    auto& slot = by_setting[*s];
    for (auto d : kDimensions) {
      if (auto v = case_dimension(c, d)) slot[d].push_back(*v);
    }
  }
  for (const auto& [s, _] : by_setting) out.settings.push_back(s);
  for (auto d : kDimensions) {
    std::vector<std::optional<double>> means;
    std::vector<double> present;
    for (const auto& s : out.settings) {
      auto m = mean_of(by_setting[s][d]);
      means.push_back(m);
      if (m) present.push_back(*m);
    }
    if (present.size() < 2) continue;
    const double mu = *mean_of(present);
    double ss = 0;
    for (double v : present) ss += (v - mu) * (v - mu);
    const double sd = std::sqrt(ss / static_cast<double>(present.size() - 1));
    std::vector<std::optional<double>> z;
    for (const auto& m : means) {
      if (!m) {
        z.push_back(std::nullopt);
      } else {
        // Identical setting means deviate by nothing.
        z.push_back(sd > 0 ? (*m - mu) / sd : 0.0);
      }
    }
    out.z[d] = z;
  }
  return out;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (!(sxx > 0) || !(syy > 0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.empty()) throw std::invalid_argument("spearman: empty input");
  const auto r = pearson(average_ranks(x), average_ranks(y));
  if (!r) throw DegenerateError("spearman: constant input has no ranking");
  return *r;
}

CorrMatrix pearson_matrix(const std::vector<ModelTable>& tables, const std::vector<Dimension>& dims) {
  if (tables.size() < 3) throw std::invalid_argument("pearson_matrix needs at least three models");
  CorrMatrix m;
  for (auto d : dims) m.labels.emplace_back(dimension_name(d));
  const std::size_t n = dims.size();
  m.r.assign(n, std::vector<std::optional<double>>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      std::vector<double> x, y;
      for (const auto& t : tables) {
        auto ia = t.dims.find(dims[a]);
        auto ib = t.dims.find(dims[b]);
        if (ia == t.dims.end() || ib == t.dims.end() || !ia->second || !ib->second) continue;
        x.push_back(*ia->second);
        y.push_back(*ib->second);
      }
      std::optional<double> r = x.size() >= 3 ? pearson(x, y) : std::nullopt;
      if (a == b && r) r = 1.0;
      m.r[a][b] = m.r[b][a] = r;
    }
  }
  return m;
}

HumanPrefSet human_win_rates(const std::vector<PairwiseVote>& votes) {
  std::map<std::string, std::map<std::string, std::pair<double, int>>> tally;
  for (const auto& v : votes) {
    if (v.model_a == v.model_b) throw std::invalid_argument("vote compares a model with itself");
    double wa;
    if (v.winner == "a") {
      wa = 1.0;
    } else if (v.winner == "b") {
      wa = 0.0;
    } else if (v.winner == "tie") {
      wa = 0.5;
    } else {
      throw std::invalid_argument("vote winner must be a, b or tie: " + v.winner);
    }
    auto& a = tally[v.aspect][v.model_a];
    auto& b = tally[v.aspect][v.model_b];
    a.first += wa;
    a.second += 1;
    b.first += 1.0 - wa;
    b.second += 1;
  }
  HumanPrefSet out;
  for (const auto& [aspect, models] : tally) {
    for (const auto& [model, wn] : models) out[aspect][model] = wn.first / wn.second;
  }
  return out;
}

std::vector<PairwiseVote> parse_votes_csv(const std::string& text) {
  std::vector<PairwiseVote> out;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (header) {
      header = false;
      if (f != std::vector<std::string>{"aspect", "model_a", "model_b", "winner"}) {
        throw ParseError("votes: header must be aspect,model_a,model_b,winner");
      }
      continue;
    }
    if (f.size() != 4) throw ParseError("votes line " + std::to_string(lineno) + ": expected 4 fields");
    out.push_back({f[0], f[1], f[2], f[3]});
  }
  return out;
}

std::map<std::string, std::optional<double>> human_alignment(const std::vector<ModelTable>& tables,
                                                             const HumanPrefSet& prefs) {
  std::map<std::string, std::optional<double>> out;
  for (const auto& [aspect, rates] : prefs) {
    std::vector<double> h, e;
    for (const auto& t : tables) {
      auto it = rates.find(t.model_id);
      const auto col = table_column(t, aspect);
      if (it == rates.end() || !col) continue;
      h.push_back(it->second);
      e.push_back(*col);
    }
    std::optional<double> rho;
    if (h.size() >= 2) {
      try {
        rho = spearman(h, e);
      } catch (const DegenerateError&) {
      }
    }
    out[aspect] = rho;
  }
  return out;
}

Report build_report(const std::map<std::string, std::vector<ScoreCard>>& cards_by_model, Split track,
                    const nlohmann::json& metadata, const std::optional<HumanPrefSet>& prefs) {
  Report r;
  r.metadata = metadata;
  std::vector<ScoreCard> pooled;
  for (const auto& [model, cards] : cards_by_model) {
    r.tables.push_back(aggregate_model(cards, track, model));
    std::vector<ScoreCard> on_track;
    for (const auto& c : cards) {
      if (track == Split::full || c.in_nav_split) on_track.push_back(c);
    }
    auto deg = turn_degradation(on_track);
    if (!deg.empty()) r.analyses.degradation[model] = std::move(deg);
    pooled.insert(pooled.end(), on_track.begin(), on_track.end());
  }
  for (auto axis : {SettingAxis::perspective, SettingAxis::scene, SettingAxis::subject}) {
    auto z = setting_zscores(pooled, axis);
    if (!z.z.empty()) r.analyses.zscores.push_back(std::move(z));
  }
  if (r.tables.size() >= 3) {
    r.analyses.correlations = pearson_matrix(r.tables, {kDimensions.begin(), kDimensions.end()});
  }
  if (prefs) r.analyses.human_alignment = human_alignment(r.tables, *prefs);
  return r;
}

Format format_from_string(const std::string& s) {
  if (s == "txt" || s == "table" || s == "text") return Format::table;
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ConfigError("unknown report format '" + s + "' (expected txt, csv or json)");
}

std::string file_name(Format f) {
  switch (f) {
    case Format::table: return "report.txt";
    case Format::csv: return "report.csv";
    case Format::json: return "report.json";
  }
  return "report";
}

std::string render_table(const Report& r) {
  std::ostringstream o;
  const std::size_t w0 = 24, w = 14;
  const std::string track = r.tables.empty() ? "" : std::string(to_string(r.tables.front().track));
  o << "Scores (track: " << track << ")\n";
  o << pad("metric", w0);
  for (const auto& t : r.tables) o << lpad(t.model_id, w);
  o << '\n';
  o << pad("cases", w0);
  for (const auto& t : r.tables) o << lpad(std::to_string(t.cases), w);
  o << '\n';
  for (auto d : kDimensions) {
    o << '\n' << dimension_name(d) << '\n';
    for (Metric m : all_metrics()) {
      if (metric_dimension(m) != d) continue;
      o << pad("  " + std::string(metric_label(m)), w0);
      for (const auto& t : r.tables) {
        auto it = t.metrics.find(m);
        o << lpad(it == t.metrics.end() ? std::string("--") : fixed(it->second.mean, 1), w);
      }
      o << '\n';
    }
    o << pad("  Average", w0);
    for (const auto& t : r.tables) o << lpad(fixed(t.dims.at(d), 1), w);
    o << '\n';
  }

  o << "\nCoverage (scored/excluded)\n";
  for (Metric m : all_metrics()) {
    o << pad("  " + std::string(metric_label(m)), w0);
    for (const auto& t : r.tables) {
      auto it = t.metrics.find(m);
      const std::string cell =
          it == t.metrics.end() ? "--" : std::to_string(it->second.n) + "/" + std::to_string(it->second.excluded);
      o << lpad(cell, w);
    }
    o << '\n';
  }

  const auto& a = r.analyses;
  for (const auto& [model, deg] : a.degradation) {
    o << "\nPer-turn degradation: " << model << '\n' << pad("series", w0);
    for (const char* b : kBucketNames) o << lpad(b, 8);
    o << '\n';
    for (const auto& [series, buckets] : deg) {
      o << pad("  " + series, w0);
      for (const auto& b : buckets) o << lpad(fixed(b.mean, 1), 8);
      o << '\n';
    }
  }
  for (const auto& z : a.zscores) {
    o << "\nSetting z-scores by " << to_string(z.axis) << '\n' << pad("dimension", w0);
    for (const auto& s : z.settings) o << lpad(s, w);
    o << '\n';
    for (const auto& [d, row] : z.z) {
      o << pad("  " + std::string(dimension_name(d)), w0);
      for (const auto& v : row) o << lpad(fixed(v, 2), w);
      o << '\n';
    }
  }
  if (a.correlations) {
    o << "\nPearson correlation of dimension averages\n" << pad("", w0);
    for (const auto& l : a.correlations->labels) o << lpad(l.substr(0, w - 2), w);
    o << '\n';
    for (std::size_t i = 0; i < a.correlations->labels.size(); ++i) {
      o << pad("  " + a.correlations->labels[i], w0);
      for (const auto& v : a.correlations->r[i]) o << lpad(fixed(v, 2), w);
      o << '\n';
    }
  }
  if (!a.human_alignment.empty()) {
    o << "\nSpearman vs human win rate\n";
    for (const auto& [aspect, rho] : a.human_alignment) o << pad("  " + aspect, w0) << lpad(fixed(rho, 2), w) << '\n';
  }
  return o.str();
}

std::string render_csv(const Report& r) {
  std::ostringstream o;
  o << "section,model_id,track,group,item,value,n,excluded\n";
  for (const auto& t : r.tables) {
    const std::string head = csv_field(t.model_id) + "," + std::string(to_string(t.track)) + ",";
    for (Metric m : all_metrics()) {
      auto it = t.metrics.find(m);
      if (it == t.metrics.end()) continue;
      o << "metric," << head << dimension_name(metric_dimension(m)) << ',' << metric_name(m) << ','
        << fixed(it->second.mean, 1) << ',' << it->second.n << ',' << it->second.excluded << '\n';
    }
    for (auto d : kDimensions) {
      o << "dimension," << head << dimension_name(d) << ",average," << fixed(t.dims.at(d), 1) << ",,\n";
    }
  }
  const std::string track = r.tables.empty() ? "" : std::string(to_string(r.tables.front().track));
  for (const auto& [model, deg] : r.analyses.degradation) {
    for (const auto& [series, buckets] : deg) {
      for (int b = 0; b < 4; ++b) {
        if (!buckets[b].n && !buckets[b].mean) continue;
        o << "degradation," << csv_field(model) << ',' << track << ',' << series << ',' << kBucketNames[b] << ','
          << fixed(buckets[b].mean, 1) << ',' << buckets[b].n << ",\n";
      }
    }
  }
  for (const auto& z : r.analyses.zscores) {
    for (const auto& [d, row] : z.z) {
      for (std::size_t k = 0; k < row.size(); ++k) {
        o << "zscore_" << to_string(z.axis) << ",," << track << ',' << dimension_name(d) << ','
          << csv_field(z.settings[k]) << ',' << fixed(row[k], 2) << ",,\n";
      }
    }
  }
  if (const auto& c = r.analyses.correlations) {
    for (std::size_t i = 0; i < c->labels.size(); ++i) {
      for (std::size_t j = 0; j < c->labels.size(); ++j) {
        o << "pearson,," << track << ',' << c->labels[i] << ',' << c->labels[j] << ',' << fixed(c->r[i][j], 2)
          << ",,\n";
      }
    }
  }
  for (const auto& [aspect, rho] : r.analyses.human_alignment) {
    o << "human_spearman,," << track << ',' << csv_field(aspect) << ",rho," << fixed(rho, 2) << ",,\n";
  }
  return o.str();
}

std::string render_json(const Report& r) {
  nlohmann::json j;
  j["metadata"] = r.metadata;
  auto& tables = j["tables"] = nlohmann::json::array();
  for (const auto& t : r.tables) {
    nlohmann::json tj;
    tj["model_id"] = t.model_id;
    tj["track"] = to_string(t.track);
    tj["cases"] = t.cases;
    auto& mj = tj["metrics"] = nlohmann::json::object();
    for (const auto& [m, agg] : t.metrics) {
      mj[std::string(metric_name(m))] = {{"mean", rounded(agg.mean, 1)}, {"n", agg.n}, {"excluded", agg.excluded}};
    }
    auto& dj = tj["dimensions"] = nlohmann::json::object();
    for (const auto& [d, v] : t.dims) dj[std::string(dimension_name(d))] = rounded(v, 1);
    tables.push_back(tj);
  }
  auto& a = j["analyses"] = nlohmann::json::object();
  auto& deg = a["degradation"] = nlohmann::json::object();
  for (const auto& [model, series] : r.analyses.degradation) {
    for (const auto& [name, buckets] : series) {
      auto& row = deg[model][name] = nlohmann::json::object();
      for (int b = 0; b < 4; ++b) {
        if (!buckets[b].mean) continue;
        row[kBucketNames[b]] = {{"mean", rounded(buckets[b].mean, 1)}, {"n", buckets[b].n}};
      }
    }
  }
  auto& zs = a["zscores"] = nlohmann::json::object();
  for (const auto& z : r.analyses.zscores) {
    auto& zj = zs[std::string(to_string(z.axis))];
    zj["settings"] = z.settings;
    for (const auto& [d, row] : z.z) {
      auto& rj = zj["z"][std::string(dimension_name(d))] = nlohmann::json::array();
      for (const auto& v : row) rj.push_back(rounded(v, 2));
    }
  }
  if (const auto& c = r.analyses.correlations) {
    auto& cj = a["pearson"];
    cj["labels"] = c->labels;
    cj["r"] = nlohmann::json::array();
    for (const auto& row : c->r) {
      auto rj = nlohmann::json::array();
      for (const auto& v : row) rj.push_back(rounded(v, 2));
      cj["r"].push_back(rj);
    }
  }
  if (!r.analyses.human_alignment.empty()) {
    auto& hj = a["human_spearman"] = nlohmann::json::object();
    for (const auto& [aspect, rho] : r.analyses.human_alignment) hj[aspect] = rounded(rho, 2);
  }
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> emit_report(const Report& r, const std::set<Format>& formats,
                                               const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> out;
  for (Format f : formats) {
    const auto path = out_dir / file_name(f);
    switch (f) {
      case Format::table: write_file(path, render_table(r)); break;
      case Format::csv: write_file(path, render_csv(r)); break;
      case Format::json: write_file(path, render_json(r)); break;
    }
    out.push_back(path);
  }
  return out;
}

}  // namespace wbench::report
