#include "posbias/textproc.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "posbias/error.hpp"

namespace posbias {
namespace {

constexpr std::string_view kDefaultAbbreviations[] = {
    "mr",  "mrs",  "ms",   "dr",   "prof", "sr",   "jr",  "st",  "mt",   "rev",  "gen",
    "col", "lt",   "sgt",  "capt", "gov",  "sen",  "rep", "pres", "vs",  "etc",  "e.g",
    "i.e", "u.s",  "u.k",  "u.n",  "a.m",  "p.m",  "inc", "ltd", "co",   "corp", "dept",
    "univ", "no",  "fig",  "jan",  "feb",  "mar",  "apr", "jun", "jul",  "aug",  "sep",
    "sept", "oct", "nov",  "dec",  "approx", "est", "ave", "blvd", "mass", "calif", "d.c",
};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return is_upper(c) || is_lower(c) || is_digit(c); }
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Length of a closing quote/bracket starting at pos, 0 if none.
std::size_t closing_mark_length(std::string_view text, std::size_t pos) {
  const char c = text[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  // U+2019 and U+201D
  if (text.substr(pos, 3) == "\xE2\x80\x99" || text.substr(pos, 3) == "\xE2\x80\x9D") return 3;
  return 0;
}

bool starts_sentence(std::string_view text, std::size_t pos) {
  const char c = text[pos];
  if (is_upper(c) || is_digit(c) || c == '"' || c == '\'') return true;
  // U+2018 and U+201C
  return text.substr(pos, 3) == "\xE2\x80\x98" || text.substr(pos, 3) == "\xE2\x80\x9C";
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (is_upper(c)) c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// The word that ends at the period at `period`, with leading brackets and
// quotes removed: "(U.S." -> "U.S".
std::string_view word_before(std::string_view text, std::size_t period) {
  std::size_t b = period;
  while (b > 0 && !is_space(text[b - 1])) --b;
  std::string_view word = text.substr(b, period - b);
  while (!word.empty() && !is_alnum(word.front())) word.remove_prefix(1);
  return word;
}

}  // namespace

SentenceSplitter::SentenceSplitter() {
  for (auto abbreviation : kDefaultAbbreviations) abbreviations_.emplace(abbreviation);
}

void SentenceSplitter::add_abbreviation(std::string_view abbreviation) {
  auto word = trim(abbreviation);
  while (!word.empty() && word.back() == '.') word.remove_suffix(1);
  if (!word.empty()) abbreviations_.insert(to_lower(word));
}

void SentenceSplitter::load_abbreviations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open abbreviation file '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    auto word = trim(line);
    if (word.empty() || word.front() == '#') continue;
    add_abbreviation(word);
  }
}

bool SentenceSplitter::is_abbreviation(std::string_view word) const {
  if (word.size() == 1 && is_alnum(word[0]) && !is_digit(word[0])) return true;  // initials
  return abbreviations_.contains(to_lower(word));
}

SentenceList SentenceSplitter::split(std::string_view text) const {
  SentenceList out;
  std::size_t start = 0;
  const std::size_t n = text.size();

  auto emit = [&](std::size_t end) {
    auto sentence = trim(text.substr(start, end - start));
    if (!sentence.empty()) out.sentences.emplace_back(sentence);
  };

  std::size_t i = 0;
  while (i < n) {
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    const std::size_t mark = i;
    std::size_t j = i + 1;
    while (j < n && is_terminal(text[j])) ++j;
    while (j < n) {
      const auto len = closing_mark_length(text, j);
      if (len == 0) break;
      j += len;
    }
    if (j >= n || !is_space(text[j])) {
      i = j;
      continue;
    }
    std::size_t next = j;
    while (next < n && is_space(text[next])) ++next;
    if (next >= n || !starts_sentence(text, next)) {
      i = next;
      continue;
    }
    // Only a lone period can be an abbreviation; "?" and "!" always split.
    if (text[mark] == '.' && j == mark + 1 && is_abbreviation(word_before(text, mark))) {
      i = next;
      continue;
    }
    emit(j);
    start = next;
    i = next;
  }
  if (start < n) emit(n);
  return out;
}

SentenceList split_sentences(std::string_view text) {
  static const SentenceSplitter splitter;
  return splitter.split(text);
}

TokenList tokenize(std::string_view sentence) {
  TokenList tokens;
  std::string current;
  for (char c : sentence) {
    if (is_alnum(c)) {
      current.push_back(is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

NgramCounts ngrams(const TokenList& tokens, std::size_t n) {
  if (n == 0) throw std::invalid_argument("n-gram order must be at least 1");
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace posbias
