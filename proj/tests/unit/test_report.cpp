#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "wbench/errors.hpp"
#include "wbench/report.hpp"
#include "tempdir.hpp"

using namespace wbench;
using namespace wbench::report;
using wbench::testing::TempDir;

namespace {

ScoreCard card(const std::string& id, std::map<Metric, std::optional<double>> vals, bool nav = true) {
  ScoreCard c;
  c.case_id = id;
  c.model_id = "m";
  c.in_nav_split = nav;
  for (const auto& [m, v] : vals) c.metrics[m] = MetricResult{v, v ? "" : "missing:poses", nullptr};
  return c;
}

// Rank by counting, then the textbook covariance formula.
double brute_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto rank = [](const std::vector<double>& v) {
    std::vector<double> r;
    for (double a : v) {
      int less = 0, eq = 0;
      for (double b : v) {
        less += b < a;
        eq += b == a;
      }
      r.push_back(1 + less + (eq - 1) / 2.0);
    }
    return r;
  };
  const auto rx = rank(x), ry = rank(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double c = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    c += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  return c / std::sqrt(vx * vy);
}

std::vector<ModelTable> synthetic_models() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(20, 90);
  std::vector<ModelTable> out;
  for (int k = 0; k < 5; ++k) {
    ModelTable t;
    t.model_id = "model" + std::to_string(k);
    for (auto d : kDimensions) t.dims[d] = u(rng);
    out.push_back(t);
  }
  return out;
}

Report sample_report() {
  std::map<std::string, std::vector<ScoreCard>> by_model;
  for (int m = 0; m < 3; ++m) {
    std::vector<ScoreCard> cards;
    for (int i = 0; i < 4; ++i) {
      auto c = card("c" + std::to_string(i), {{Metric::navigation, 50.0 + 10 * i + m},
                                             {Metric::aesthetic_quality, 40.0 + 5 * m},
                                             {Metric::event_editing, std::nullopt}});
      c.perspective = i % 2 ? Perspective::third_person : Perspective::first_person;
      if (c.perspective == Perspective::third_person) c.subject_category = SubjectCategory::animal;
      c.scene_category = i < 2 ? SceneCategory::urban : SceneCategory::nature;
      c.turns.push_back({0, TurnKind::navigation, Metric::navigation, 80.0 + m, ""});
      c.turns.push_back({1, TurnKind::navigation, Metric::navigation, 70.0 - i, ""});
      cards.push_back(c);
    }
    by_model["model" + std::to_string(m)] = cards;
  }
  return build_report(by_model, Split::full, {{"tool", "wbench"}});
}

}  // namespace

TEST(Aggregate, MeansAndExclusions) {
  const auto t = aggregate_model({card("a", {{Metric::navigation, 80.0}}), card("b", {{Metric::navigation, 90.0}})},
                                 Split::full);
  EXPECT_DOUBLE_EQ(*t.metrics.at(Metric::navigation).mean, 85.0);

  const auto t2 = aggregate_model({card("a", {{Metric::navigation, 80.0}}), card("b", {{Metric::navigation, std::nullopt}})},
                                  Split::full);
  EXPECT_DOUBLE_EQ(*t2.metrics.at(Metric::navigation).mean, 80.0);
  EXPECT_EQ(t2.metrics.at(Metric::navigation).n, 1);
  EXPECT_EQ(t2.metrics.at(Metric::navigation).excluded, 1);
}

TEST(Aggregate, DimensionAverage) {
  const auto t = aggregate_model({card("a", {{Metric::aesthetic_quality, 50.0}, {Metric::imaging_quality, 70.0}})},
                                 Split::full);
  EXPECT_DOUBLE_EQ(*t.dims.at(Dimension::video_quality), 60.0);
  EXPECT_FALSE(t.dims.at(Dimension::physical).has_value());
}

TEST(Aggregate, NavTrackFiltersCases) {
  const auto t = aggregate_model({card("a", {{Metric::navigation, 80.0}}, true),
                                  card("b", {{Metric::navigation, 20.0}}, false)},
                                 Split::nav);
  EXPECT_EQ(t.cases, 1);
  EXPECT_DOUBLE_EQ(*t.metrics.at(Metric::navigation).mean, 80.0);
}

TEST(Aggregate, PermutationInvariant) {
  std::vector<ScoreCard> cards;
  for (int i = 0; i < 9; ++i) cards.push_back(card("c" + std::to_string(i), {{Metric::navigation, 0.1 * i + 1.0 / 3.0}}));
  const auto a = aggregate_model(cards, Split::full);
  std::reverse(cards.begin(), cards.end());
  std::swap(cards[1], cards[6]);
  const auto b = aggregate_model(cards, Split::full);
  EXPECT_EQ(*a.metrics.at(Metric::navigation).mean, *b.metrics.at(Metric::navigation).mean);
}

TEST(Degradation, Buckets) {
  ScoreCard c;
  const double s[5] = {90, 80, 70, 60, 50};
  for (int t = 0; t < 5; ++t) c.turns.push_back({t, TurnKind::event_editing, Metric::event_editing, s[t], ""});
  const auto d = turn_degradation({c});
  const auto& ee = d.at("event_editing");
  EXPECT_DOUBLE_EQ(*ee[0].mean, 90);
  EXPECT_DOUBLE_EQ(*ee[2].mean, 70);
  EXPECT_DOUBLE_EQ(*ee[3].mean, 55);
  EXPECT_EQ(ee[3].n, 2);
  EXPECT_DOUBLE_EQ(*d.at("semantic")[3].mean, 55);
}

TEST(Degradation, FlatAndShort) {
  ScoreCard c;
  for (int t = 0; t < 3; ++t) c.turns.push_back({t, TurnKind::navigation, Metric::navigation, 70.0, ""});
  c.turns.push_back({0, TurnKind::navigation, Metric::causal_fidelity, 10.0, ""});
  const auto d = turn_degradation({c});
  const auto& nav = d.at("navigation");
  for (int b = 0; b < 3; ++b) EXPECT_DOUBLE_EQ(*nav[b].mean, 70);
  EXPECT_FALSE(nav[3].mean.has_value());
  EXPECT_EQ(d.count("semantic"), 0u);
}

TEST(ZScores, Examples) {
  auto a = card("a", {{Metric::navigation, 60.0}});
  auto b = card("b", {{Metric::navigation, 80.0}});
  b.perspective = Perspective::third_person;
  const auto z = setting_zscores({a, b}, SettingAxis::perspective);
  const auto& v = z.z.at(Dimension::interaction_adherence);
  // (m - 70) / sqrt(((60-70)^2 + (80-70)^2) / (2 - 1))
  const double sd = std::sqrt(200.0);
  EXPECT_NEAR(*v[0], -10.0 / sd, 1e-12);
  EXPECT_NEAR(*v[1], 10.0 / sd, 1e-12);

  auto c = card("c", {{Metric::navigation, 60.0}});
  c.perspective = Perspective::third_person;
  const auto flat = setting_zscores({a, c}, SettingAxis::perspective);
  for (const auto& x : flat.z.at(Dimension::interaction_adherence)) EXPECT_EQ(*x, 0.0);

  std::vector<ScoreCard> three;
  for (auto sc : {SceneCategory::urban, SceneCategory::nature, SceneCategory::indoor}) {
    auto k = card("k", {{Metric::navigation, 42.0}});
    k.scene_category = sc;
    three.push_back(k);
  }
  const auto z3 = setting_zscores(three, SettingAxis::scene);
  for (const auto& x : z3.z.at(Dimension::interaction_adherence)) EXPECT_EQ(*x, 0.0);

  EXPECT_TRUE(setting_zscores({a}, SettingAxis::perspective).z.empty());
}

TEST(Rank, Spearman) {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  EXPECT_NEAR(spearman(x, {10, 20, 30, 40, 50}), 1.0, 1e-15);
  EXPECT_NEAR(spearman(x, {5, 4, 3, 2, 1}), -1.0, 1e-15);
  const std::vector<double> tx = {1, 2, 2, 3}, ty = {1, 3, 2, 4};
  EXPECT_NEAR(spearman(tx, ty), brute_spearman(tx, ty), 1e-12);
  EXPECT_NEAR(spearman(tx, ty), 4.5 / std::sqrt(22.5), 1e-12);
  EXPECT_EQ(average_ranks(tx), (std::vector<double>{1, 2.5, 2.5, 4}));
  EXPECT_THROW(spearman({1, 2}, {1}), std::invalid_argument);
  EXPECT_THROW(spearman({}, {}), std::invalid_argument);
  EXPECT_THROW(spearman({2, 2, 2}, {1, 2, 3}), DegenerateError);
}

TEST(Rank, Pearson) {
  EXPECT_NEAR(*pearson({1, 2, 3}, {2, 4, 6}), 1.0, 1e-15);
  EXPECT_NEAR(*pearson({1, 2, 3}, {3, 2, 1}), -1.0, 1e-15);
  EXPECT_FALSE(pearson({1, 1, 1}, {1, 2, 3}).has_value());
}

TEST(Rank, PearsonMatrixMatchesCovarianceOracle) {
  const auto models = synthetic_models();
  const std::vector<Dimension> dims(kDimensions.begin(), kDimensions.end());
  const auto m = pearson_matrix(models, dims);
  ASSERT_EQ(m.r.size(), dims.size());
  for (std::size_t a = 0; a < dims.size(); ++a) {
    EXPECT_EQ(*m.r[a][a], 1.0);
    for (std::size_t b = 0; b < dims.size(); ++b) {
      EXPECT_NEAR(*m.r[a][b], *m.r[b][a], 1e-12);
      double ma = 0, mb = 0;
      for (const auto& t : models) {
        ma += *t.dims.at(dims[a]) / 5;
        mb += *t.dims.at(dims[b]) / 5;
      }
      double c = 0, va = 0, vb = 0;
      for (const auto& t : models) {
        const double da = *t.dims.at(dims[a]) - ma, db = *t.dims.at(dims[b]) - mb;
        c += da * db;
        va += da * da;
        vb += db * db;
      }
      EXPECT_NEAR(*m.r[a][b], c / std::sqrt(va * vb), 1e-12);
    }
  }
  EXPECT_THROW(pearson_matrix({models[0], models[1]}, dims), std::invalid_argument);
}

TEST(Human, WinRatesAndAlignment) {
  const auto votes = parse_votes_csv(
      "aspect,model_a,model_b,winner\nnavigation,x,y,a\nnavigation,x,z,tie\nnavigation,y,z,b\n");
  ASSERT_EQ(votes.size(), 3u);
  const auto rates = human_win_rates(votes);
  EXPECT_DOUBLE_EQ(rates.at("navigation").at("x"), 0.75);
  EXPECT_DOUBLE_EQ(rates.at("navigation").at("y"), 0.0);
  EXPECT_DOUBLE_EQ(rates.at("navigation").at("z"), 0.75);
  EXPECT_THROW(parse_votes_csv("a,b\n"), ParseError);

  std::vector<ModelTable> tables;
  for (auto [id, v] : {std::pair{"x", 90.0}, {"y", 10.0}, {"z", 80.0}}) {
    ModelTable t;
    t.model_id = id;
    t.metrics[Metric::navigation].mean = v;
    tables.push_back(t);
  }
  const auto al = human_alignment(tables, rates);
  EXPECT_NEAR(*al.at("navigation"), brute_spearman({0.75, 0.0, 0.75}, {90, 10, 80}), 1e-12);
}

TEST(Render, DeterministicAndComplete) {
  const auto r = sample_report();
  EXPECT_EQ(render_table(r), render_table(sample_report()));
  EXPECT_EQ(render_csv(r), render_csv(sample_report()));
  EXPECT_EQ(render_json(r), render_json(sample_report()));
  EXPECT_TRUE(r.analyses.correlations.has_value());
  EXPECT_FALSE(r.analyses.zscores.empty());
  EXPECT_EQ(r.analyses.degradation.size(), 3u);
  EXPECT_EQ(render_csv(r).rfind("section,model_id,track,group,item,value,n,excluded\n", 0), 0u);
  const auto j = nlohmann::json::parse(render_json(r));
  EXPECT_EQ(j["metadata"]["tool"], "wbench");
  const std::string table = render_table(r);
  EXPECT_NE(table.find("--"), std::string::npos);
  EXPECT_EQ(table.find("-0.0"), std::string::npos);
}

TEST(Render, TablesOnlyWithoutAnalyses) {
  const auto r = build_report({{"solo", {card("a", {{Metric::navigation, 70.0}})}}}, Split::full, {});
  EXPECT_FALSE(r.analyses.correlations.has_value());
  EXPECT_TRUE(r.analyses.zscores.empty());
  EXPECT_NO_THROW(render_table(r));
  EXPECT_NO_THROW(nlohmann::json::parse(render_json(r)));
}

TEST(Render, EmitFormats) {
  TempDir tmp;
  const auto r = sample_report();
  const auto paths = emit_report(r, {Format::csv, Format::json}, tmp.path());
  EXPECT_EQ(paths.size(), 2u);
  EXPECT_TRUE(std::filesystem::exists(tmp / "report.csv"));
  EXPECT_TRUE(std::filesystem::exists(tmp / "report.json"));
  EXPECT_FALSE(std::filesystem::exists(tmp / "report.txt"));
  EXPECT_EQ(format_from_string("txt"), Format::table);
  EXPECT_THROW(format_from_string("xlsx"), ConfigError);
}

TEST(ScoreCardJson, RoundTrip) {
  auto c = card("a", {{Metric::navigation, 71.25}, {Metric::geometric_consistency, std::nullopt}});
  c.subject_category = SubjectCategory::robot;
  c.turn_kinds = {TurnKind::navigation, TurnKind::navigation};
  c.turns.push_back({1, TurnKind::navigation, Metric::navigation, 50.0, ""});
  c.validity.excluded[Metric::geometric_consistency] = "missing:depth";
  c.validity.missing_inputs = {"depth"};
  c.not_applicable = {Metric::event_editing};
  const auto text = dump_scorecard(c);
  EXPECT_EQ(dump_scorecard(scorecard_from_json(nlohmann::json::parse(text))), text);
  EXPECT_EQ(text.back(), '\n');
}

TEST(Metrics, Registry) {
  EXPECT_EQ(all_metrics().size(), kMetricCount);
  for (auto m : all_metrics()) EXPECT_EQ(metric_from_name(metric_name(m)), m);
  EXPECT_TRUE(metric_uses_judge(Metric::event_editing));
  EXPECT_FALSE(metric_uses_judge(Metric::visual_plausibility));
  EXPECT_EQ(metric_dimension(Metric::causal_fidelity), Dimension::physical);
  EXPECT_FALSE(metric_from_name("nonsense").has_value());
}
