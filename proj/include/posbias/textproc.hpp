#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace posbias {

// Ordered sentences of one text. size() is the N used for segmentation.
struct SentenceList {
  std::vector<std::string> sentences;

  std::size_t size() const noexcept { return sentences.size(); }
  bool empty() const noexcept { return sentences.empty(); }
  const std::string& operator[](std::size_t i) const { return sentences[i]; }
};

using TokenList = std::vector<std::string>;
using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, std::size_t>;

/// Rule-based sentence splitter.
///
/// A boundary is placed after '.', '!' or '?' (plus any closing quotes or
/// brackets) when the next non-space character is an uppercase letter, a
/// digit, or an opening quote, unless the word ending at a '.' is a known
/// abbreviation or a single-letter initial. Text after the last boundary is
/// kept as a final sentence even without terminal punctuation.
class SentenceSplitter {
 public:
  SentenceSplitter();

  /// Extra abbreviations, without the trailing period ("approx", "U.K").
  void add_abbreviation(std::string_view abbreviation);

  /// Reads one abbreviation per line; blank lines and '#' comments skipped.
  void load_abbreviations(const std::string& path);

  bool is_abbreviation(std::string_view word) const;

  SentenceList split(std::string_view text) const;

 private:
  std::set<std::string, std::less<>> abbreviations_;
};

// Uses the built-in abbreviation list.
SentenceList split_sentences(std::string_view text);

/// Lowercases ASCII letters and splits on every run of characters outside
/// [A-Za-z0-9]. Non-ASCII bytes act as separators.
TokenList tokenize(std::string_view sentence);

/// All contiguous windows of n tokens with multiplicity. Throws
/// std::invalid_argument when n == 0.
NgramCounts ngrams(const TokenList& tokens, std::size_t n);

}  // namespace posbias
