#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "posbias/error.hpp"
#include "posbias/simmetrics.hpp"
#include "posbias/textproc.hpp"

namespace posbias {

// Inclusive 0-based sentence index bounds.
struct SegmentInterval {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t length() const noexcept { return last - first + 1; }
  bool operator==(const SegmentInterval&) const = default;
};

/// K near-equal contiguous segments of an N-sentence article. With
/// c = N / K and d = N % K, segment j (1-based) covers
/// [(j-1)c + min(j-1, d), jc + min(j, d) - 1]: the first d segments hold
/// c + 1 sentences and the rest hold c.
struct SegmentationPlan {
  std::size_t k = 0;
  std::size_t n = 0;
  std::size_t base_length = 0;  // c
  std::size_t remainder = 0;    // d
  std::vector<SegmentInterval> intervals;

  /// 1-based segment holding sentence `index`. Requires index < n.
  std::size_t segment_of(std::size_t index) const;
};

// Raised when an article has fewer sentences than segments.
class ShortArticleError : public DataError {
 public:
  ShortArticleError(std::size_t n, std::size_t k);
};

/// Throws ShortArticleError when k > n and std::invalid_argument when k == 0.
SegmentationPlan segment_article(std::size_t n, std::size_t k);

enum class Phi { tfidf_cosine, rouge1 };

Phi parse_phi(std::string_view name);
std::string_view phi_name(Phi phi);

struct MappingConfig {
  Phi phi = Phi::tfidf_cosine;
  std::size_t top_n = 1;
};

// Mapped sources for one summary sentence, best first. No indices means the
// sentence had zero similarity with every article sentence.
struct SentenceMatch {
  std::vector<std::size_t> article_indices;
  std::vector<double> scores;
  std::vector<std::size_t> segments;  // 1-based, filled by assign_segments

  bool unmapped() const noexcept { return article_indices.empty(); }
};

struct SentenceMapping {
  std::vector<SentenceMatch> sentences;
};

/// Scores query sentences against the sentences of one article. For TF-IDF
/// the idf collection is the article's own sentences.
class ArticleMatcher {
 public:
  /// Throws DataError for an article with no sentences.
  ArticleMatcher(const SentenceList& article, Phi phi);

  std::size_t size() const noexcept { return tokens_.size(); }

  std::vector<double> scores(const TokenList& query) const;

  /// Top-n article sentences by score, ties to the lower index; sentences
  /// with zero score are never selected.
  SentenceMatch match(const TokenList& query, std::size_t top_n) const;

 private:
  Phi phi_;
  std::vector<TokenList> tokens_;
  TfidfSpace space_;
  std::vector<SparseVector> embeddings_;
};

SentenceMapping map_summary(const SentenceList& summary, const ArticleMatcher& matcher,
                            const MappingConfig& config);

SentenceMapping map_summary(const SentenceList& summary, const SentenceList& article,
                            const MappingConfig& config);

void assign_segments(SentenceMapping& mapping, const SegmentationPlan& plan);

enum class BinPositions { normalized, index };

BinPositions parse_bin_positions(std::string_view name);
std::string_view bin_positions_name(BinPositions bins);

// Segment j sits at j / K (normalized) or at j (index).
std::vector<double> support_positions(std::size_t k, BinPositions bins);

struct PositionalDistribution {
  std::size_t k = 0;
  std::vector<double> mass;
  std::vector<double> support;
};

// Per-series hit counts; merge() is commutative so shards can be combined
// in any order.
struct SegmentCounts {
  explicit SegmentCounts(std::size_t k = 0) : hits(k, 0) {}

  std::vector<std::size_t> hits;  // index j-1 holds segment j
  std::size_t mapped_sentences = 0;
  std::size_t unmapped_sentences = 0;

  std::size_t total_hits() const;
  std::size_t total_sentences() const noexcept { return mapped_sentences + unmapped_sentences; }
  void merge(const SegmentCounts& other);
};

SegmentCounts count_segments(const SentenceMapping& mapping, const SegmentationPlan& plan);

struct ArticleMapping {
  SentenceMapping mapping;
  SegmentationPlan plan;
};

enum class Aggregation { pooled, article_mean };

Aggregation parse_aggregation(std::string_view name);
std::string_view aggregation_name(Aggregation aggregation);

struct AccumulatedDistribution {
  PositionalDistribution distribution;
  double unmapped_fraction = 0.0;
};

/// Normalized counts. Throws DataError when nothing was mapped.
PositionalDistribution distribution_from_counts(const SegmentCounts& counts, BinPositions bins);

/// Positional distribution over a corpus. Pooled mode counts every mapped
/// (summary sentence, article sentence) pair once and normalizes the
/// corpus total; article_mean averages the per-article distributions of
/// articles with at least one mapped sentence.
///
/// Throws DataError when plans disagree on k or nothing was mapped.
AccumulatedDistribution accumulate_distribution(std::span<const ArticleMapping> articles, std::size_t k,
                                                BinPositions bins = BinPositions::normalized,
                                                Aggregation aggregation = Aggregation::pooled);

PositionalDistribution article_distribution(const ArticleMapping& article,
                                            BinPositions bins = BinPositions::normalized);

}  // namespace posbias
