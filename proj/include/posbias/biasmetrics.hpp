#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "posbias/posmap.hpp"
#include "posbias/simmetrics.hpp"

namespace posbias {

struct BiasReport {
  std::string model_name;
  double wasserstein = 0.0;
  RougeScores rouge;
  double lead_bias_fraction = 0.0;
  double unmapped_fraction = 0.0;
  std::size_t skipped_short_articles = 0;
  std::size_t refusals = 0;  // records with an empty or absent summary
  PositionalDistribution gold_distribution;
  PositionalDistribution model_distribution;
};

/// Wasserstein-1 distance on a shared 1-D support:
/// sum over j < K of |F_p(j) - F_q(j)| * (x_{j+1} - x_j).
/// Throws DataError when k or the support positions differ.
double wasserstein1(const PositionalDistribution& p, const PositionalDistribution& q);

/// Share of mapped (summary sentence, article sentence) contributions whose
/// 0-based article index is below k_prime. Throws DataError when nothing is
/// mapped and ConfigError for k_prime == 0.
double lead_bias_fraction(std::span<const SentenceMapping> mappings, std::size_t k_prime);

enum class CorrelationMethod { exact_permutation, t_approximation };

// * for p <= 0.1, ** for p <= 0.05.
enum class Significance { none, one, two };

std::string_view method_name(CorrelationMethod method);
std::string_view stars_text(Significance stars);
Significance significance_for(double p_value);

struct CorrelationResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  CorrelationMethod method = CorrelationMethod::exact_permutation;
  Significance stars = Significance::none;
};

// Largest sample size tested by full enumeration (8! = 40320 orderings).
inline constexpr std::size_t kExactPermutationLimit = 8;

// 1-based ranks; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman's rho with a one-sided p-value in the direction of the observed
/// sign (upper tail for rho >= 0).
///
/// Without ties rho = 1 - 6 sum(d^2) / (n(n^2 - 1)); with ties it is the
/// Pearson correlation of the average ranks. For n <= 8 the p-value is the
/// share of all n! reorderings of the y ranks whose rho is at least as
/// extreme as the observed one. Larger samples use the Student t
/// approximation with n - 2 degrees of freedom.
///
/// Throws DataError on a length mismatch, n < 3, or a constant input.
CorrelationResult spearman(std::span<const double> xs, std::span<const double> ys);

enum class RougeMetric { r1, r2, rl };

RougeMetric parse_rouge_metric(std::string_view name);
std::string_view rouge_metric_name(RougeMetric metric);
double rouge_value(const RougeScores& scores, RougeMetric metric);

// Spearman over (wasserstein, rouge metric) pairs across models.
CorrelationResult correlate_models(std::span<const BiasReport> reports, RougeMetric metric);

}  // namespace posbias
