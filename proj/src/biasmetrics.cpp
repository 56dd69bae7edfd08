#include "posbias/biasmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

namespace posbias {
namespace {

bool has_ties(std::span<const double> ranks) {
  std::vector<double> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - mean_a) * (b[i] - mean_b);
    var_a += (a[i] - mean_a) * (a[i] - mean_a);
    var_b += (b[i] - mean_b) * (b[i] - mean_b);
  }
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

// Untied ranks are integers, so sum(d^2) is exact.
long long squared_rank_distance(std::span<const double> a, std::span<const double> b) {
  long long sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto d = std::llround(a[i] - b[i]);
    sum += d * d;
  }
  return sum;
}

double rho_from_distance(long long sum_d2, std::size_t n) {
  const auto nn = static_cast<long long>(n);
  const long long denominator = nn * (nn * nn - 1);
  return static_cast<double>(denominator - 6 * sum_d2) / static_cast<double>(denominator);
}

double exact_permutation_p(std::span<const double> x_ranks, std::span<const double> y_ranks, double rho_obs,
                           bool untied) {
  const std::size_t n = x_ranks.size();
  const bool upper = rho_obs >= 0.0;
  const long long observed_d2 = untied ? squared_rank_distance(x_ranks, y_ranks) : 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> permuted(n);
  std::size_t extreme = 0;
  std::size_t total = 0;
  do {
    for (std::size_t i = 0; i < n; ++i) permuted[i] = y_ranks[order[i]];
    bool hit;
    if (untied) {
      const auto d2 = squared_rank_distance(x_ranks, permuted);
      hit = upper ? d2 <= observed_d2 : d2 >= observed_d2;
    } else {
      constexpr double kTolerance = 1e-12;
      const double rho = pearson(x_ranks, permuted);
      hit = upper ? rho >= rho_obs - kTolerance : rho <= rho_obs + kTolerance;
    }
    extreme += hit ? 1 : 0;
    ++total;
  } while (std::next_permutation(order.begin(), order.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

double t_approximation_p(double rho, std::size_t n) {
  if (std::abs(rho) >= 1.0) return 0.0;
  const double dof = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(dof / (1.0 - rho * rho));
  boost::math::students_t_distribution<double> dist(dof);
  return rho >= 0.0 ? boost::math::cdf(boost::math::complement(dist, t)) : boost::math::cdf(dist, t);
}

}  // namespace

double wasserstein1(const PositionalDistribution& p, const PositionalDistribution& q) {
  if (p.k != q.k || p.mass.size() != p.k || q.mass.size() != q.k || p.support != q.support) {
    throw DataError("wasserstein1 needs distributions on the same support");
  }
  double distance = 0.0;
  double cdf_p = 0.0;
  double cdf_q = 0.0;
  for (std::size_t j = 0; j + 1 < p.k; ++j) {
    cdf_p += p.mass[j];
    cdf_q += q.mass[j];
    distance += std::abs(cdf_p - cdf_q) * (p.support[j + 1] - p.support[j]);
  }
  return distance;
}

double lead_bias_fraction(std::span<const SentenceMapping> mappings, std::size_t k_prime) {
  if (k_prime == 0) throw ConfigError("k' must be at least 1");
  std::size_t lead = 0;
  std::size_t total = 0;
  for (const auto& mapping : mappings) {
    for (const auto& sentence : mapping.sentences) {
      for (auto index : sentence.article_indices) {
        ++total;
        if (index < k_prime) ++lead;
      }
    }
  }
  if (total == 0) throw DataError("every summary sentence is unmapped; lead bias is undefined");
  return static_cast<double>(lead) / static_cast<double>(total);
}

std::string_view method_name(CorrelationMethod method) {
  return method == CorrelationMethod::exact_permutation ? "exact_permutation" : "t_approximation";
}

std::string_view stars_text(Significance stars) {
  switch (stars) {
    case Significance::two:
      return "**";
    case Significance::one:
      return "*";
    case Significance::none:
      break;
  }
  return "";
}

Significance significance_for(double p_value) {
  if (p_value <= 0.05) return Significance::two;
  if (p_value <= 0.1) return Significance::one;
  return Significance::none;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

CorrelationResult spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw DataError(fmt::format("spearman needs equal-length samples, got {} and {}", xs.size(), ys.size()));
  }
  if (xs.size() < 3) throw DataError(fmt::format("spearman needs at least 3 samples, got {}", xs.size()));
  const auto x_ranks = average_ranks(xs);
  const auto y_ranks = average_ranks(ys);
  const auto constant = [](const std::vector<double>& r) {
    return std::all_of(r.begin(), r.end(), [&](double v) { return v == r.front(); });
  };
  if (constant(x_ranks) || constant(y_ranks)) throw DataError("spearman is undefined for a constant sample");

  CorrelationResult result;
  result.n = xs.size();
  const bool untied = !has_ties(x_ranks) && !has_ties(y_ranks);
  result.rho = untied ? rho_from_distance(squared_rank_distance(x_ranks, y_ranks), result.n)
                      : pearson(x_ranks, y_ranks);
  if (result.n <= kExactPermutationLimit) {
    result.method = CorrelationMethod::exact_permutation;
    result.p_value = exact_permutation_p(x_ranks, y_ranks, result.rho, untied);
  } else {
    result.method = CorrelationMethod::t_approximation;
    result.p_value = t_approximation_p(result.rho, result.n);
  }
  result.stars = significance_for(result.p_value);
  return result;
}

RougeMetric parse_rouge_metric(std::string_view name) {
  if (name == "r1") return RougeMetric::r1;
  if (name == "r2") return RougeMetric::r2;
  if (name == "rl") return RougeMetric::rl;
  throw ConfigError(fmt::format("unknown ROUGE metric '{}' (expected r1, r2 or rl)", name));
}

std::string_view rouge_metric_name(RougeMetric metric) {
  switch (metric) {
    case RougeMetric::r1:
      return "r1";
    case RougeMetric::r2:
      return "r2";
    case RougeMetric::rl:
      return "rl";
  }
  return "";
}

double rouge_value(const RougeScores& scores, RougeMetric metric) {
  switch (metric) {
    case RougeMetric::r1:
      return scores.r1;
    case RougeMetric::r2:
      return scores.r2;
    case RougeMetric::rl:
      return scores.rl;
  }
  return 0.0;
}

CorrelationResult correlate_models(std::span<const BiasReport> reports, RougeMetric metric) {
  std::vector<double> distances;
  std::vector<double> rouge;
  for (const auto& report : reports) {
    distances.push_back(report.wasserstein);
    rouge.push_back(rouge_value(report.rouge, metric));
  }
  return spearman(distances, rouge);
}

}  // namespace posbias
