#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "posbias/textproc.hpp"

namespace posbias {

// One article with its gold summary and any model summaries.
// An empty model summary is a recorded refusal, not a missing one.
struct CorpusRecord {
  std::string id;
  std::string article;
  std::string gold_summary;
  std::map<std::string, std::string> model_summaries;

  bool operator==(const CorpusRecord&) const = default;
};

enum class CorpusFormat { jsonl, csv };

CorpusFormat parse_corpus_format(std::string_view name);

// csv for a ".csv" extension, jsonl otherwise.
CorpusFormat corpus_format_for(const std::filesystem::path& path);

/// Reads a corpus in file order. Blank lines (jsonl) are skipped.
/// Throws DataError with a line number on malformed input, on a duplicate
/// id, and when no record is found; IoError when the file cannot be read.
std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path, CorpusFormat format);

/// Writes one record per line (jsonl) or per row (csv). Model summaries go
/// into columns named "model:<name>" in lexicographic order. In csv an
/// unquoted empty cell means the record has no summary for that model,
/// while a quoted empty cell ("") is an empty summary.
void save_corpus(const std::vector<CorpusRecord>& records, const std::filesystem::path& path,
                 CorpusFormat format);

// Checks the per-record invariants and id uniqueness. Throws DataError.
void validate_records(const std::vector<CorpusRecord>& records);

struct CorpusStats {
  std::size_t num_articles = 0;
  double avg_sentences_per_article = 0.0;
  std::size_t total_summary_sentences = 0;
  double avg_sentences_per_summary = 0.0;
};

// "gold" or "model:<name>".
struct SummarySource {
  static SummarySource gold() { return {}; }
  static SummarySource model(std::string name) { return {std::move(name)}; }
  static SummarySource parse(std::string_view text);

  bool is_gold() const { return model_name.empty(); }

  std::string model_name;
};

/// Sentence statistics. Throws DataError listing the ids of records that
/// lack the requested model summary.
CorpusStats corpus_stats(const std::vector<CorpusRecord>& records, const SentenceSplitter& splitter,
                         const SummarySource& source);

}  // namespace posbias
