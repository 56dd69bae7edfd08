#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "posbias/textproc.hpp"

namespace posbias {

// L2-normalized sparse vector, entries sorted by dimension.
using SparseVector = std::vector<std::pair<std::size_t, double>>;

/// TF-IDF weighting over a fixed document collection.
///
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1, so every in-vocabulary weight is
/// finite and at least 1. Immutable once built.
class TfidfSpace {
 public:
  /// Throws std::invalid_argument for an empty collection.
  static TfidfSpace build(const std::vector<TokenList>& documents);

  std::size_t doc_count() const noexcept { return doc_count_; }
  std::size_t dimension() const noexcept { return idf_.size(); }
  const std::unordered_map<std::string, std::size_t>& vocabulary() const noexcept { return vocabulary_; }
  const std::vector<double>& idf() const noexcept { return idf_; }

  // Nothing for out-of-vocabulary tokens.
  std::optional<double> idf_of(const std::string& token) const;

  /// Raw term frequency times idf, L2-normalized. Out-of-vocabulary tokens
  /// are dropped; an all-zero vector comes back empty.
  SparseVector embed(const TokenList& tokens) const;

 private:
  std::unordered_map<std::string, std::size_t> vocabulary_;
  std::vector<double> idf_;
  std::size_t doc_count_ = 0;
};

// Dot product of two normalized sparse vectors, clamped to [0, 1].
double cosine(const SparseVector& a, const SparseVector& b);

double tfidf_cosine(const TokenList& query, const TokenList& doc, const TfidfSpace& space);

struct RougeScores {
  double r1 = 0.0;
  double r2 = 0.0;
  double rl = 0.0;
};

// Harmonic mean of precision and recall; 0 when either is 0.
double f1_score(double precision, double recall);

/// ROUGE-N F1 with clipped (multiset) n-gram overlap. Throws
/// std::invalid_argument unless n is 1 or 2.
double rouge_n(const TokenList& candidate, const TokenList& reference, std::size_t n);

/// ROUGE-L F1 from the token-level longest common subsequence.
double rouge_l(const TokenList& candidate, const TokenList& reference);

std::size_t lcs_length(const TokenList& a, const TokenList& b);

RougeScores rouge_scores(const TokenList& candidate, const TokenList& reference);

/// Unweighted mean of per-pair scores over whole-summary token lists.
/// Throws DataError on a length mismatch or empty input.
RougeScores corpus_rouge(const std::vector<std::string>& candidates,
                         const std::vector<std::string>& references);

}  // namespace posbias
