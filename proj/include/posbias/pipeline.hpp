#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "posbias/corpus.hpp"
#include "posbias/report.hpp"
#include "posbias/textproc.hpp"

namespace posbias {

struct AnalyzeOptions {
  std::string corpus_name = "corpus";
  AnalysisSettings settings;
  std::vector<std::string> models;  // empty: every model in the corpus
  std::vector<RougeMetric> correlation_metrics{RougeMetric::r1, RougeMetric::r2, RougeMetric::rl};
  std::size_t workers = 1;
  SentenceSplitter splitter;
};

struct AnalysisResult {
  AnalysisBundle bundle;
  std::vector<std::string> warnings;
};

/// Split, map, segment and accumulate gold and model summaries, then
/// compute distances, ROUGE, lead bias and (with three or more models)
/// correlations.
///
/// Articles with fewer than K sentences are skipped and counted, or raise
/// ShortArticleError under the error policy. A record whose model summary
/// is absent or empty counts as a refusal for that model and is left out of
/// its distribution and ROUGE means. Work is spread over `workers` threads;
/// every reduction runs in corpus order, so output does not depend on the
/// worker count.
///
/// Throws DataError when every article is skipped or a series has no mapped
/// sentence, and ConfigError for invalid settings or unknown models.
AnalysisResult analyze_corpus(const std::vector<CorpusRecord>& records, const AnalyzeOptions& options);

}  // namespace posbias
