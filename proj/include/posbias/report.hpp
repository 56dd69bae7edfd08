#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "posbias/biasmetrics.hpp"
#include "posbias/posmap.hpp"

namespace posbias {

enum class ShortArticlePolicy { skip, error };

ShortArticlePolicy parse_short_article_policy(std::string_view name);
std::string_view short_article_policy_name(ShortArticlePolicy policy);

struct AnalysisSettings {
  std::size_t k = 10;
  MappingConfig mapping;
  std::size_t k_prime = 3;
  BinPositions bins = BinPositions::normalized;
  Aggregation aggregation = Aggregation::pooled;
  ShortArticlePolicy short_articles = ShortArticlePolicy::skip;
  std::uint64_t seed = 0;
};

struct MetricCorrelation {
  RougeMetric metric = RougeMetric::r1;
  CorrelationResult result;
};

struct AnalysisBundle {
  std::string corpus_name;
  AnalysisSettings settings;
  std::size_t articles_analyzed = 0;
  std::size_t skipped_short_articles = 0;
  PositionalDistribution gold_distribution;
  double gold_lead_bias_fraction = 0.0;
  double gold_unmapped_fraction = 0.0;
  std::vector<BiasReport> models;  // sorted by name
  std::vector<MetricCorrelation> correlations;

  std::size_t k() const noexcept { return settings.k; }
};

// Fixed six-decimal rendering used by every emitted file.
std::string format_real(double value);

std::string render_json(const AnalysisBundle& bundle);
std::string render_distributions_csv(const AnalysisBundle& bundle);
std::string render_metrics_csv(const AnalysisBundle& bundle);
std::string render_correlations_csv(const AnalysisBundle& bundle);

/// Line chart of segment index against mass, one polyline and legend entry
/// per series (gold first). The plot group carries data-* attributes with
/// its origin and scale so coordinates can be mapped back to values.
std::string render_distribution_svg(const AnalysisBundle& bundle);

/// Paired bars per model, sorted by name: ROUGE-1 on the left axis over
/// [0, 1] and Wasserstein distance on the right axis over [0, span of the
/// support]. Each bar has a three-decimal value label.
std::string render_bias_bars_svg(const AnalysisBundle& bundle);

/// Writers; each throws IoError naming the path on failure.
void emit_json(const AnalysisBundle& bundle, const std::filesystem::path& path);
// distributions.csv, metrics.csv and correlations.csv inside `dir`.
void emit_csv(const AnalysisBundle& bundle, const std::filesystem::path& dir);
void render_distribution_chart(const AnalysisBundle& bundle, const std::filesystem::path& path);
void render_bias_bars(const AnalysisBundle& bundle, const std::filesystem::path& path);

}  // namespace posbias
