#include "posbias/report.hpp"

#include <cmath>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>
#include <gtest/gtest.h>
#include <json.hpp>

#include "posbias/error.hpp"
#include "test_support.hpp"

namespace posbias {
namespace {

namespace pt = boost::property_tree;

PositionalDistribution dist(std::vector<double> mass) {
  PositionalDistribution d;
  d.k = mass.size();
  d.mass = std::move(mass);
  d.support = support_positions(d.k, BinPositions::normalized);
  return d;
}

BiasReport model(std::string name, std::vector<double> mass, double w, RougeScores rouge) {
  BiasReport r;
  r.model_name = std::move(name);
  r.model_distribution = dist(std::move(mass));
  r.wasserstein = w;
  r.rouge = rouge;
  r.lead_bias_fraction = 0.25;
  return r;
}

AnalysisBundle sample_bundle() {
  AnalysisBundle b;
  b.corpus_name = "sample <corpus> & co";
  b.settings.k = 4;
  b.articles_analyzed = 7;
  b.skipped_short_articles = 1;
  b.gold_distribution = dist({0.1, 0.2, 0.3, 0.4});
  b.gold_lead_bias_fraction = 0.125;
  b.models.push_back(model("beta", {1.0, 0.0, 0.0, 0.0}, 0.45, {0.5, 0.25, 0.4}));
  b.models.push_back(model("alpha", {0.0, 0.0, 0.0, 1.0}, 0.75, {1.0, 0.0, 0.2}));
  std::sort(b.models.begin(), b.models.end(), [](auto& x, auto& y) { return x.model_name < y.model_name; });
  CorrelationResult c;
  c.rho = -0.5;
  c.p_value = 0.25;
  c.n = 3;
  b.correlations.push_back({RougeMetric::r1, c});
  return b;
}

AnalysisBundle gold_only() {
  auto b = sample_bundle();
  b.models.clear();
  b.correlations.clear();
  return b;
}

// Every element below `tree` whose class attribute contains `cls`.
void collect(const pt::ptree& tree, const std::string& tag, const std::string& cls,
             std::vector<const pt::ptree*>& out) {
  for (const auto& [name, child] : tree) {
    if (name == "<xmlattr>") continue;
    if (name == tag) {
      const auto klass = child.get<std::string>("<xmlattr>.class", "");
      std::istringstream words(klass);
      std::string word;
      bool match = cls.empty();
      while (words >> word) match = match || word == cls;
      if (match) out.push_back(&child);
    }
    collect(child, tag, cls, out);
  }
}

pt::ptree parse_svg(const std::string& svg) {
  std::istringstream in(svg);
  pt::ptree tree;
  pt::read_xml(in, tree);  // throws on malformed XML
  return tree;
}

std::vector<const pt::ptree*> find(const pt::ptree& tree, const std::string& tag, const std::string& cls) {
  std::vector<const pt::ptree*> out;
  collect(tree, tag, cls, out);
  return out;
}

double attr(const pt::ptree* node, const std::string& name) {
  return node->get<double>("<xmlattr>." + name);
}

TEST(FormatReal, SixDecimals) {
  EXPECT_EQ(format_real(0.45), "0.450000");
  EXPECT_EQ(format_real(1.0), "1.000000");
  EXPECT_EQ(format_real(-0.0), "0.000000");
  EXPECT_EQ(format_real(2.0 / 3.0), "0.666667");
}

TEST(ShortArticlePolicyNames, Parse) {
  EXPECT_EQ(parse_short_article_policy("skip"), ShortArticlePolicy::skip);
  EXPECT_EQ(parse_short_article_policy(short_article_policy_name(ShortArticlePolicy::error)),
            ShortArticlePolicy::error);
  EXPECT_THROW(parse_short_article_policy("truncate"), ConfigError);
}

TEST(Json, StructureAndFixedPrecision) {
  const auto text = render_json(sample_bundle());
  EXPECT_EQ(text, render_json(sample_bundle()));
  EXPECT_NE(text.find("\"wasserstein\": 0.450000"), std::string::npos);
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["corpus_name"], "sample <corpus> & co");
  EXPECT_EQ(j["k"], 4);
  EXPECT_EQ(j["config"]["phi"], "tfidf");
  EXPECT_EQ(j["config"]["top_n"], 1);
  EXPECT_EQ(j["config"]["k_prime"], 3);
  EXPECT_EQ(j["articles_analyzed"], 7);
  EXPECT_EQ(j["skipped_short_articles"], 1);
  EXPECT_EQ(j["gold_distribution"]["mass"].size(), 4u);
  EXPECT_DOUBLE_EQ(j["gold_distribution"]["lead_bias_fraction"].get<double>(), 0.125);
  ASSERT_EQ(j["models"].size(), 2u);
  EXPECT_EQ(j["models"][0]["name"], "alpha");
  EXPECT_DOUBLE_EQ(j["models"][1]["rouge"]["r2"].get<double>(), 0.25);
  EXPECT_EQ(j["models"][1]["distribution"]["mass"][0], 1.0);
  ASSERT_EQ(j["correlations"].size(), 1u);
  EXPECT_EQ(j["correlations"][0]["metric"], "r1");
  EXPECT_EQ(j["correlations"][0]["method"], "exact_permutation");
  EXPECT_EQ(j["correlations"][0]["stars"], "");
}

TEST(Json, GoldOnlyHasEmptyArrays) {
  const auto j = nlohmann::json::parse(render_json(gold_only()));
  EXPECT_TRUE(j["models"].is_array());
  EXPECT_TRUE(j["models"].empty());
  EXPECT_TRUE(j["correlations"].empty());
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TEST(Csv, Shapes) {
  const auto b = sample_bundle();
  EXPECT_EQ(lines(render_distributions_csv(b)),
            (std::vector<std::string>{"series,seg1,seg2,seg3,seg4", "gold,0.100000,0.200000,0.300000,0.400000",
                                      "alpha,0.000000,0.000000,0.000000,1.000000",
                                      "beta,1.000000,0.000000,0.000000,0.000000"}));
  const auto metrics = lines(render_metrics_csv(b));
  ASSERT_EQ(metrics.size(), 3u);
  EXPECT_EQ(metrics[0], "model,wasserstein,r1,r2,rl,lead_bias_fraction,unmapped_fraction");
  EXPECT_EQ(metrics[2], "beta,0.450000,0.500000,0.250000,0.400000,0.250000,0.000000");
  EXPECT_EQ(lines(render_correlations_csv(b)),
            (std::vector<std::string>{"metric,rho,p_value,stars", "r1,-0.500000,0.250000,"}));
}

TEST(Csv, GoldOnlyHeadersOnly) {
  const auto b = gold_only();
  EXPECT_EQ(lines(render_metrics_csv(b)).size(), 1u);
  EXPECT_EQ(lines(render_correlations_csv(b)).size(), 1u);
  EXPECT_EQ(lines(render_distributions_csv(b)).size(), 2u);
}

TEST(Csv, AgreesWithJson) {
  const auto b = sample_bundle();
  const auto j = nlohmann::json::parse(render_json(b));
  const auto metrics = lines(render_metrics_csv(b));
  for (std::size_t i = 0; i < b.models.size(); ++i) {
    const auto& m = j["models"][i];
    const auto expected = fmt::format("{},{},{},{},{},{},{}", m["name"].get<std::string>(),
                                      format_real(m["wasserstein"]), format_real(m["rouge"]["r1"]),
                                      format_real(m["rouge"]["r2"]), format_real(m["rouge"]["rl"]),
                                      format_real(m["lead_bias_fraction"]), format_real(m["unmapped_fraction"]));
    EXPECT_EQ(metrics[i + 1], expected);
  }
}

TEST(DistributionSvg, GoldOnlyHasOneSeries) {
  const auto tree = parse_svg(render_distribution_svg(gold_only()));
  EXPECT_EQ(find(tree, "polyline", "series").size(), 1u);
  EXPECT_EQ(find(tree, "g", "legend-entry").size(), 1u);
}

TEST(DistributionSvg, OneSeriesPerModel) {
  auto b = sample_bundle();
  for (const char* name : {"c", "d", "e"}) b.models.push_back(model(name, {0.25, 0.25, 0.25, 0.25}, 0.1, {}));
  const auto tree = parse_svg(render_distribution_svg(b));
  const auto series = find(tree, "polyline", "series");
  ASSERT_EQ(series.size(), 6u);
  EXPECT_EQ(series[0]->get<std::string>("<xmlattr>.data-series"), "gold");
  EXPECT_EQ(find(tree, "g", "legend-entry").size(), 6u);
}

TEST(DistributionSvg, CoordinatesInvertToMass) {
  auto b = gold_only();
  b.settings.k = 5;
  b.gold_distribution = dist({0.0, 0.0, 1.0, 0.0, 0.0});
  b.models.push_back(model("m", {0.05, 0.15, 0.2, 0.27, 0.33}, 0.1, {}));
  const auto tree = parse_svg(render_distribution_svg(b));
  const auto plot = find(tree, "g", "plot").at(0);
  const double x0 = attr(plot, "data-x0"), y0 = attr(plot, "data-y0");
  const double width = attr(plot, "data-width"), height = attr(plot, "data-height");
  const double y_max = attr(plot, "data-y-max");
  EXPECT_DOUBLE_EQ(y_max, 1.0);
  const auto series = find(tree, "polyline", "series");
  ASSERT_EQ(series.size(), 2u);
  const std::vector<const PositionalDistribution*> expected{&b.gold_distribution, &b.models[0].model_distribution};
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::istringstream points(series[s]->get<std::string>("<xmlattr>.points"));
    std::string pair;
    std::size_t j = 0;
    while (points >> pair) {
      const auto comma = pair.find(',');
      const double x = std::stod(pair.substr(0, comma)), y = std::stod(pair.substr(comma + 1));
      EXPECT_NEAR(1.0 + (x - x0) / width * 4.0, static_cast<double>(j + 1), 0.01);
      EXPECT_NEAR(y_max * (1.0 - (y - y0) / height), expected[s]->mass[j], 0.01);
      ++j;
    }
    EXPECT_EQ(j, 5u);
  }
}

TEST(DistributionSvg, AxisScalesToLargestMass) {
  auto b = gold_only();
  b.gold_distribution = dist({0.13, 0.27, 0.3, 0.3});
  const auto tree = parse_svg(render_distribution_svg(b));
  EXPECT_NEAR(attr(find(tree, "g", "plot").at(0), "data-y-max"), 0.3, 1e-12);
}

TEST(DistributionSvg, EscapesNames) {
  auto b = gold_only();
  b.models.push_back(model("a<b>&\"c\"", {0.25, 0.25, 0.25, 0.25}, 0.1, {}));
  const auto tree = parse_svg(render_distribution_svg(b));
  EXPECT_EQ(find(tree, "polyline", "series").at(1)->get<std::string>("<xmlattr>.data-series"), "a<b>&\"c\"");
}

TEST(BiasBarsSvg, BarsScaleAndLabelsMatchMetrics) {
  auto b = sample_bundle();
  b.models[0].rouge.r1 = 1.0;
  b.models[0].wasserstein = 0.75;  // full span of a 4-point normalized support
  b.models[1].rouge.r1 = 0.0;
  b.models[1].wasserstein = 0.0;
  const auto tree = parse_svg(render_bias_bars_svg(b));
  const auto plot = find(tree, "g", "plot").at(0);
  const double height = attr(plot, "data-height");
  const auto r1_bars = find(tree, "rect", "r1"), w_bars = find(tree, "rect", "wasserstein");
  ASSERT_EQ(r1_bars.size(), 2u);
  ASSERT_EQ(w_bars.size(), 2u);
  EXPECT_NEAR(attr(r1_bars[0], "height"), height, 0.01);
  EXPECT_NEAR(attr(w_bars[0], "height"), height, 0.01);
  EXPECT_NEAR(attr(r1_bars[1], "height"), 0.0, 0.01);
  EXPECT_NEAR(attr(w_bars[1], "height"), 0.0, 0.01);
  const auto labels = find(tree, "text", "model-label");
  ASSERT_EQ(labels.size(), 2u);
  EXPECT_EQ(labels[0]->data(), "alpha");
  EXPECT_EQ(labels[1]->data(), "beta");

  const auto values = find(tree, "text", "value");
  const auto metrics = lines(render_metrics_csv(b));
  for (std::size_t i = 0; i < b.models.size(); ++i) {
    std::vector<std::string> cells;
    std::istringstream row(metrics[i + 1]);
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    EXPECT_EQ(values[2 * i]->data(), fmt::format("{:.3f}", std::stod(cells[2])));
    EXPECT_EQ(values[2 * i + 1]->data(), fmt::format("{:.3f}", std::stod(cells[1])));
  }
}

TEST(BiasBarsSvg, NeedsModels) { EXPECT_THROW(render_bias_bars_svg(gold_only()), DataError); }

TEST(Writers, FilesAndIoErrors) {
  testing::TempDir dir;
  const auto b = sample_bundle();
  emit_json(b, dir / "a.json");
  emit_csv(b, dir.path());
  render_distribution_chart(b, dir / "d.svg");
  render_bias_bars(b, dir / "b.svg");
  EXPECT_EQ(testing::slurp(dir / "a.json"), render_json(b));
  EXPECT_EQ(testing::slurp(dir / "metrics.csv"), render_metrics_csv(b));
  EXPECT_EQ(testing::slurp(dir / "distributions.csv"), render_distributions_csv(b));
  EXPECT_EQ(testing::slurp(dir / "correlations.csv"), render_correlations_csv(b));
  EXPECT_EQ(testing::slurp(dir / "d.svg"), render_distribution_svg(b));
  EXPECT_EQ(testing::slurp(dir / "b.svg"), render_bias_bars_svg(b));
  EXPECT_THROW(emit_json(b, dir / "missing" / "a.json"), IoError);
  EXPECT_THROW(emit_csv(b, dir / "missing"), IoError);
}

}  // namespace
}  // namespace posbias
