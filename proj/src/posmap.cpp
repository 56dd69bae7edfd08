#include "posbias/posmap.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace posbias {

ShortArticleError::ShortArticleError(std::size_t n, std::size_t k)
    : DataError(fmt::format("article has {} sentences, fewer than the {} segments requested", n, k)) {}

std::size_t SegmentationPlan::segment_of(std::size_t index) const {
  if (index >= n) throw std::out_of_range(fmt::format("sentence {} outside article of {}", index, n));
  const std::size_t oversized_span = remainder * (base_length + 1);
  if (index < oversized_span) return index / (base_length + 1) + 1;
  return remainder + (index - oversized_span) / base_length + 1;
}

SegmentationPlan segment_article(std::size_t n, std::size_t k) {
  if (k == 0) throw std::invalid_argument("segment count must be at least 1");
  if (k > n) throw ShortArticleError(n, k);
  SegmentationPlan plan;
  plan.k = k;
  plan.n = n;
  plan.base_length = n / k;
  plan.remainder = n % k;
  plan.intervals.reserve(k);
  const auto c = plan.base_length;
  const auto d = plan.remainder;
  for (std::size_t j = 1; j <= k; ++j) {
    plan.intervals.push_back({(j - 1) * c + std::min(j - 1, d), j * c + std::min(j, d) - 1});
  }
  return plan;
}

Phi parse_phi(std::string_view name) {
  if (name == "tfidf" || name == "tfidf_cosine") return Phi::tfidf_cosine;
  if (name == "rouge1") return Phi::rouge1;
  throw ConfigError(fmt::format("unknown mapping function '{}' (expected tfidf or rouge1)", name));
}

std::string_view phi_name(Phi phi) { return phi == Phi::tfidf_cosine ? "tfidf" : "rouge1"; }

ArticleMatcher::ArticleMatcher(const SentenceList& article, Phi phi) : phi_(phi) {
  if (article.empty()) throw DataError("cannot map a summary onto an empty article");
  tokens_.reserve(article.size());
  for (const auto& sentence : article.sentences) tokens_.push_back(tokenize(sentence));
  if (phi_ == Phi::tfidf_cosine) {
    space_ = TfidfSpace::build(tokens_);
    embeddings_.reserve(tokens_.size());
    for (const auto& tokens : tokens_) embeddings_.push_back(space_.embed(tokens));
  }
}

std::vector<double> ArticleMatcher::scores(const TokenList& query) const {
  std::vector<double> out(tokens_.size(), 0.0);
  if (phi_ == Phi::tfidf_cosine) {
    const auto q = space_.embed(query);
    if (q.empty()) return out;
    for (std::size_t i = 0; i < embeddings_.size(); ++i) out[i] = cosine(q, embeddings_[i]);
  } else {
    for (std::size_t i = 0; i < tokens_.size(); ++i) out[i] = rouge_n(query, tokens_[i], 1);
  }
  return out;
}

SentenceMatch ArticleMatcher::match(const TokenList& query, std::size_t top_n) const {
  const auto score = scores(query);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (score[i] > 0.0) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  if (order.size() > top_n) order.resize(top_n);
  SentenceMatch m;
  m.article_indices = std::move(order);
  for (auto i : m.article_indices) m.scores.push_back(score[i]);
  return m;
}

SentenceMapping map_summary(const SentenceList& summary, const ArticleMatcher& matcher,
                            const MappingConfig& config) {
  if (config.top_n == 0) throw ConfigError("top_n must be at least 1");
  SentenceMapping mapping;
  mapping.sentences.reserve(summary.size());
  for (const auto& sentence : summary.sentences) {
    mapping.sentences.push_back(matcher.match(tokenize(sentence), config.top_n));
  }
  return mapping;
}

SentenceMapping map_summary(const SentenceList& summary, const SentenceList& article,
                            const MappingConfig& config) {
  return map_summary(summary, ArticleMatcher(article, config.phi), config);
}

void assign_segments(SentenceMapping& mapping, const SegmentationPlan& plan) {
  for (auto& sentence : mapping.sentences) {
    sentence.segments.clear();
    for (auto index : sentence.article_indices) sentence.segments.push_back(plan.segment_of(index));
  }
}

BinPositions parse_bin_positions(std::string_view name) {
  if (name == "normalized") return BinPositions::normalized;
  if (name == "index") return BinPositions::index;
  throw ConfigError(fmt::format("unknown bin positions '{}' (expected normalized or index)", name));
}

std::string_view bin_positions_name(BinPositions bins) {
  return bins == BinPositions::normalized ? "normalized" : "index";
}

std::vector<double> support_positions(std::size_t k, BinPositions bins) {
  std::vector<double> support(k);
  for (std::size_t j = 1; j <= k; ++j) {
    support[j - 1] = bins == BinPositions::normalized ? static_cast<double>(j) / static_cast<double>(k)
                                                      : static_cast<double>(j);
  }
  return support;
}

std::size_t SegmentCounts::total_hits() const { return std::accumulate(hits.begin(), hits.end(), std::size_t{0}); }

void SegmentCounts::merge(const SegmentCounts& other) {
  if (hits.size() != other.hits.size()) throw DataError("cannot merge counts with different segment counts");
  for (std::size_t j = 0; j < hits.size(); ++j) hits[j] += other.hits[j];
  mapped_sentences += other.mapped_sentences;
  unmapped_sentences += other.unmapped_sentences;
}

SegmentCounts count_segments(const SentenceMapping& mapping, const SegmentationPlan& plan) {
  SegmentCounts counts(plan.k);
  for (const auto& sentence : mapping.sentences) {
    if (sentence.unmapped()) {
      ++counts.unmapped_sentences;
      continue;
    }
    ++counts.mapped_sentences;
    for (auto index : sentence.article_indices) ++counts.hits[plan.segment_of(index) - 1];
  }
  return counts;
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "pooled") return Aggregation::pooled;
  if (name == "article-mean" || name == "article_mean") return Aggregation::article_mean;
  throw ConfigError(fmt::format("unknown aggregation '{}' (expected pooled or article-mean)", name));
}

std::string_view aggregation_name(Aggregation aggregation) {
  return aggregation == Aggregation::pooled ? "pooled" : "article-mean";
}

PositionalDistribution distribution_from_counts(const SegmentCounts& counts, BinPositions bins) {
  const auto total = counts.total_hits();
  if (total == 0) throw DataError("every summary sentence is unmapped; no distribution can be formed");
  PositionalDistribution dist;
  dist.k = counts.hits.size();
  dist.support = support_positions(dist.k, bins);
  dist.mass.reserve(dist.k);
  for (auto hits : counts.hits) dist.mass.push_back(static_cast<double>(hits) / static_cast<double>(total));
  return dist;
}

AccumulatedDistribution accumulate_distribution(std::span<const ArticleMapping> articles, std::size_t k,
                                                BinPositions bins, Aggregation aggregation) {
  SegmentCounts pooled(k);
  std::vector<double> mean_mass(k, 0.0);
  std::size_t contributing = 0;
  for (const auto& article : articles) {
    if (article.plan.k != k) {
      throw DataError(fmt::format("segmentation plan has k = {}, expected {}", article.plan.k, k));
    }
    const auto counts = count_segments(article.mapping, article.plan);
    pooled.merge(counts);
    if (aggregation == Aggregation::article_mean && counts.total_hits() > 0) {
      const auto total = static_cast<double>(counts.total_hits());
      for (std::size_t j = 0; j < k; ++j) mean_mass[j] += static_cast<double>(counts.hits[j]) / total;
      ++contributing;
    }
  }
  AccumulatedDistribution result;
  result.distribution = distribution_from_counts(pooled, bins);
  if (aggregation == Aggregation::article_mean) {
    for (std::size_t j = 0; j < k; ++j) result.distribution.mass[j] = mean_mass[j] / static_cast<double>(contributing);
  }
  result.unmapped_fraction =
      static_cast<double>(pooled.unmapped_sentences) / static_cast<double>(pooled.total_sentences());
  return result;
}

PositionalDistribution article_distribution(const ArticleMapping& article, BinPositions bins) {
  return distribution_from_counts(count_segments(article.mapping, article.plan), bins);
}

}  // namespace posbias
