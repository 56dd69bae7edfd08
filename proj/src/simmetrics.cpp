#include "posbias/simmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>

#include "posbias/error.hpp"

namespace posbias {

TfidfSpace TfidfSpace::build(const std::vector<TokenList>& documents) {
  if (documents.empty()) throw std::invalid_argument("cannot build a TF-IDF space from zero documents");
  TfidfSpace space;
  space.doc_count_ = documents.size();
  std::vector<std::size_t> df;
  std::unordered_set<std::size_t> seen;
  for (const auto& doc : documents) {
    seen.clear();
    for (const auto& token : doc) {
      auto [it, inserted] = space.vocabulary_.try_emplace(token, df.size());
      if (inserted) df.push_back(0);
      if (seen.insert(it->second).second) ++df[it->second];
    }
  }
  const double n = static_cast<double>(space.doc_count_);
  space.idf_.reserve(df.size());
  for (auto count : df) space.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  return space;
}

std::optional<double> TfidfSpace::idf_of(const std::string& token) const {
  auto it = vocabulary_.find(token);
  if (it == vocabulary_.end()) return std::nullopt;
  return idf_[it->second];
}

SparseVector TfidfSpace::embed(const TokenList& tokens) const {
  SparseVector v;
  for (const auto& token : tokens) {
    auto it = vocabulary_.find(token);
    if (it != vocabulary_.end()) v.emplace_back(it->second, 0.0);
  }
  std::sort(v.begin(), v.end());
  // Collapse repeats into raw term frequency.
  SparseVector out;
  for (const auto& [dim, unused] : v) {
    if (!out.empty() && out.back().first == dim) {
      out.back().second += 1.0;
    } else {
      out.emplace_back(dim, 1.0);
    }
  }
  double norm = 0.0;
  for (auto& [dim, weight] : out) {
    weight *= idf_[dim];
    norm += weight * weight;
  }
  if (norm <= 0.0) return {};
  norm = std::sqrt(norm);
  for (auto& entry : out) entry.second /= norm;
  return out;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  double dot = 0.0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      dot += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return std::clamp(dot, 0.0, 1.0);
}

double tfidf_cosine(const TokenList& query, const TokenList& doc, const TfidfSpace& space) {
  return cosine(space.embed(query), space.embed(doc));
}

double f1_score(double precision, double recall) {
  if (precision <= 0.0 || recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double rouge_n(const TokenList& candidate, const TokenList& reference, std::size_t n) {
  if (n != 1 && n != 2) throw std::invalid_argument(fmt::format("ROUGE-N supports n = 1 or 2, got {}", n));
  const auto cand = ngrams(candidate, n);
  const auto ref = ngrams(reference, n);
  std::size_t cand_total = 0;
  std::size_t ref_total = 0;
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand) cand_total += count;
  for (const auto& [gram, count] : ref) {
    ref_total += count;
    if (auto it = cand.find(gram); it != cand.end()) overlap += std::min(count, it->second);
  }
  if (cand_total == 0 || ref_total == 0 || overlap == 0) return 0.0;
  return f1_score(static_cast<double>(overlap) / static_cast<double>(cand_total),
                  static_cast<double>(overlap) / static_cast<double>(ref_total));
}

std::size_t lcs_length(const TokenList& a, const TokenList& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

double rouge_l(const TokenList& candidate, const TokenList& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  return f1_score(lcs / static_cast<double>(candidate.size()), lcs / static_cast<double>(reference.size()));
}

RougeScores rouge_scores(const TokenList& candidate, const TokenList& reference) {
  return {rouge_n(candidate, reference, 1), rouge_n(candidate, reference, 2), rouge_l(candidate, reference)};
}

RougeScores corpus_rouge(const std::vector<std::string>& candidates, const std::vector<std::string>& references) {
  if (candidates.size() != references.size()) {
    throw DataError(fmt::format("candidate/reference count mismatch: {} vs {}", candidates.size(),
                                references.size()));
  }
  if (candidates.empty()) throw DataError("no summary pairs to score");
  RougeScores sum;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto scores = rouge_scores(tokenize(candidates[i]), tokenize(references[i]));
    sum.r1 += scores.r1;
    sum.r2 += scores.r2;
    sum.rl += scores.rl;
  }
  const auto n = static_cast<double>(candidates.size());
  return {sum.r1 / n, sum.r2 / n, sum.rl / n};
}

}  // namespace posbias
