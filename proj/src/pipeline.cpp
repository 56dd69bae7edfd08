#include "posbias/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "posbias/error.hpp"

namespace posbias {
namespace {

struct ModelWork {
  bool refused = true;
  std::optional<RougeScores> rouge;
  SentenceMapping mapping;
};

struct ArticleWork {
  bool skipped = false;
  SegmentationPlan plan;
  SentenceMapping gold;
  std::vector<ModelWork> models;
  std::exception_ptr error;
};

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

ArticleWork analyze_article(const CorpusRecord& record, const std::vector<std::string>& models,
                            const AnalyzeOptions& options) {
  const auto& settings = options.settings;
  ArticleWork work;
  work.models.resize(models.size());

  // ROUGE does not depend on segmentation, so it covers short articles too.
  const auto gold_tokens = tokenize(record.gold_summary);
  for (std::size_t m = 0; m < models.size(); ++m) {
    auto it = record.model_summaries.find(models[m]);
    if (it == record.model_summaries.end() || blank(it->second)) continue;
    work.models[m].refused = false;
    work.models[m].rouge = rouge_scores(tokenize(it->second), gold_tokens);
  }

  const auto article = options.splitter.split(record.article);
  if (article.size() < settings.k) {
    if (settings.short_articles == ShortArticlePolicy::error) {
      throw DataError(fmt::format("record '{}': {}", record.id, ShortArticleError(article.size(), settings.k).what()));
    }
    work.skipped = true;
    return work;
  }
  work.plan = segment_article(article.size(), settings.k);
  const ArticleMatcher matcher(article, settings.mapping.phi);
  work.gold = map_summary(options.splitter.split(record.gold_summary), matcher, settings.mapping);
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (work.models[m].refused) continue;
    work.models[m].mapping =
        map_summary(options.splitter.split(record.model_summaries.at(models[m])), matcher, settings.mapping);
  }
  return work;
}

std::vector<std::string> select_models(const std::vector<CorpusRecord>& records, const AnalyzeOptions& options) {
  std::set<std::string> present;
  for (const auto& record : records) {
    for (const auto& [name, text] : record.model_summaries) present.insert(name);
  }
  if (options.models.empty()) return {present.begin(), present.end()};
  std::set<std::string> chosen;
  for (const auto& name : options.models) {
    if (!present.contains(name)) throw ConfigError(fmt::format("model '{}' does not occur in the corpus", name));
    chosen.insert(name);
  }
  return {chosen.begin(), chosen.end()};
}

void validate_settings(const AnalyzeOptions& options) {
  const auto& s = options.settings;
  if (s.k == 0) throw ConfigError("k must be at least 1");
  if (s.mapping.top_n < 1 || s.mapping.top_n > 3) throw ConfigError("top-n must be 1, 2 or 3");
  if (s.k_prime == 0) throw ConfigError("k' must be at least 1");
  if (options.workers == 0) throw ConfigError("worker count must be at least 1");
}

struct Series {
  std::vector<ArticleMapping> articles;
  std::size_t refusals = 0;
};

AccumulatedDistribution accumulate_series(const Series& series, const AnalysisSettings& settings,
                                          std::string_view name) {
  try {
    return accumulate_distribution(series.articles, settings.k, settings.bins, settings.aggregation);
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", name, e.what()));
  }
}

double series_lead_bias(Series& series, std::size_t k_prime, std::string_view name) {
  std::vector<SentenceMapping> mappings;
  mappings.reserve(series.articles.size());
  for (auto& article : series.articles) mappings.push_back(std::move(article.mapping));
  try {
    return lead_bias_fraction(mappings, k_prime);
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", name, e.what()));
  }
}

}  // namespace

AnalysisResult analyze_corpus(const std::vector<CorpusRecord>& records, const AnalyzeOptions& options) {
  validate_settings(options);
  if (records.empty()) throw DataError("corpus is empty");
  const auto models = select_models(records, options);
  const auto& settings = options.settings;

  std::vector<ArticleWork> work(records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next.fetch_add(1); i < records.size(); i = next.fetch_add(1)) {
      try {
        work[i] = analyze_article(records[i], models, options);
      } catch (...) {
        work[i].error = std::current_exception();
      }
    }
  };
  const auto thread_count = std::min(options.workers, records.size());
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  for (const auto& w : work) {
    if (w.error) std::rethrow_exception(w.error);
  }

  AnalysisResult result;
  auto& bundle = result.bundle;
  bundle.corpus_name = options.corpus_name;
  bundle.settings = settings;

  Series gold;
  std::vector<Series> model_series(models.size());
  std::vector<RougeScores> rouge_sum(models.size());
  std::vector<std::size_t> rouge_pairs(models.size(), 0);
  for (auto& w : work) {
    for (std::size_t m = 0; m < models.size(); ++m) {
      auto& mw = w.models[m];
      if (mw.rouge) {
        rouge_sum[m].r1 += mw.rouge->r1;
        rouge_sum[m].r2 += mw.rouge->r2;
        rouge_sum[m].rl += mw.rouge->rl;
        ++rouge_pairs[m];
      }
      if (mw.refused) ++model_series[m].refusals;
    }
    if (w.skipped) {
      ++bundle.skipped_short_articles;
      continue;
    }
    ++bundle.articles_analyzed;
    gold.articles.push_back({std::move(w.gold), w.plan});
    for (std::size_t m = 0; m < models.size(); ++m) {
      if (!w.models[m].refused) model_series[m].articles.push_back({std::move(w.models[m].mapping), w.plan});
    }
  }
  work.clear();

  if (bundle.articles_analyzed == 0) {
    throw DataError(fmt::format("all articles skipped: every article has fewer than k = {} sentences", settings.k));
  }
  if (bundle.skipped_short_articles > 0) {
    result.warnings.push_back(fmt::format("skipped {} short article(s) with fewer than {} sentences",
                                          bundle.skipped_short_articles, settings.k));
  }

  const auto gold_acc = accumulate_series(gold, settings, "gold");
  bundle.gold_distribution = gold_acc.distribution;
  bundle.gold_unmapped_fraction = gold_acc.unmapped_fraction;
  bundle.gold_lead_bias_fraction = series_lead_bias(gold, settings.k_prime, "gold");

  for (std::size_t m = 0; m < models.size(); ++m) {
    auto& series = model_series[m];
    const auto label = fmt::format("model '{}'", models[m]);
    if (series.articles.empty()) throw DataError(fmt::format("{}: no usable summaries", label));
    const auto acc = accumulate_series(series, settings, label);
    BiasReport report;
    report.model_name = models[m];
    report.gold_distribution = bundle.gold_distribution;
    report.model_distribution = acc.distribution;
    report.wasserstein = wasserstein1(bundle.gold_distribution, acc.distribution);
    report.unmapped_fraction = acc.unmapped_fraction;
    report.lead_bias_fraction = series_lead_bias(series, settings.k_prime, label);
    report.skipped_short_articles = bundle.skipped_short_articles;
    report.refusals = series.refusals;
    if (rouge_pairs[m] > 0) {
      const auto n = static_cast<double>(rouge_pairs[m]);
      report.rouge = {rouge_sum[m].r1 / n, rouge_sum[m].r2 / n, rouge_sum[m].rl / n};
    }
    if (series.refusals > 0) {
      result.warnings.push_back(fmt::format("{}: {} record(s) without a usable summary", label, series.refusals));
    }
    bundle.models.push_back(std::move(report));
  }

  if (bundle.models.size() >= 3) {
    for (auto metric : options.correlation_metrics) {
      try {
        bundle.correlations.push_back({metric, correlate_models(bundle.models, metric)});
      } catch (const DataError& e) {
        result.warnings.push_back(fmt::format("correlation with {} skipped: {}", rouge_metric_name(metric), e.what()));
      }
    }
  }
  return result;
}

}  // namespace posbias
