#include "posbias/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "posbias/error.hpp"
#include "posbias/synth.hpp"

namespace posbias::cli {
namespace {

int report_error(std::ostream& err, const Error& e) {
  fmt::print(err, "posbias: {}: {}\n", category_name(e.category()), e.what());
  return static_cast<int>(e.category());
}

// Runs `body`, mapping failures onto exit statuses.
template <typename Fn>
int guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const Error& e) {
    return report_error(err, e);
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error(err, IoError(e.what()));
  } catch (const std::invalid_argument& e) {
    return report_error(err, ConfigError(e.what()));
  } catch (const std::exception& e) {
    return report_error(err, DataError(e.what()));
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
  out.flush();
  if (!out) throw IoError(fmt::format("write failure on '{}'", path.string()));
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    auto item = text.substr(pos, end - pos);
    if (!item.empty()) items.push_back(std::move(item));
    pos = end + 1;
  }
  return items;
}

}  // namespace

std::filesystem::path truth_path_for(const std::filesystem::path& corpus_path) {
  auto path = corpus_path;
  path += ".truth.json";
  return path;
}

int cmd_analyze(const AnalyzeConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto options = config.options;
    if (config.abbrev_file) options.splitter.load_abbreviations(config.abbrev_file->string());
    const auto format = config.format.value_or(corpus_format_for(config.input));
    const auto records = load_corpus(config.input, format);
    auto result = analyze_corpus(records, options);
    for (const auto& warning : result.warnings) fmt::print(err, "posbias: warning: {}\n", warning);

    const auto& bundle = result.bundle;
    ensure_directory(config.out_dir);
    emit_json(bundle, config.out_dir / kAnalysisJson);
    emit_csv(bundle, config.out_dir);
    render_distribution_chart(bundle, config.out_dir / kDistributionSvg);
    if (!bundle.models.empty()) render_bias_bars(bundle, config.out_dir / kBiasBarsSvg);

    fmt::print(out, "corpus {}: {} articles analyzed, {} skipped, k = {}\n", bundle.corpus_name,
               bundle.articles_analyzed, bundle.skipped_short_articles, bundle.k());
    fmt::print(out, "gold\tlead@{} {}\tunmapped {}\n", bundle.settings.k_prime,
               format_real(bundle.gold_lead_bias_fraction), format_real(bundle.gold_unmapped_fraction));
    for (const auto& m : bundle.models) {
      fmt::print(out, "{}\tW {}\tR1 {}\tR2 {}\tRL {}\tlead@{} {}\tunmapped {}\n", m.model_name,
                 format_real(m.wasserstein), format_real(m.rouge.r1), format_real(m.rouge.r2),
                 format_real(m.rouge.rl), bundle.settings.k_prime, format_real(m.lead_bias_fraction),
                 format_real(m.unmapped_fraction));
    }
    for (const auto& [metric, c] : bundle.correlations) {
      fmt::print(out, "spearman(W, {})\trho {}{}\tp {}\n", rouge_metric_name(metric), format_real(c.rho),
                 stars_text(c.stars), format_real(c.p_value));
    }
    return kExitOk;
  });
}

int cmd_generate(const GenerateConfig& config, Transport& transport, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.endpoint.empty()) throw ConfigError("--endpoint is required");
    if (config.model_name.empty()) throw ConfigError("--model-name is required");
    if (config.api_key.empty()) throw ConfigError("POSBIAS_API_KEY is not set");

    PromptTemplate prompt;
    if (config.template_file) {
      prompt = load_template(*config.template_file, config.required_sentences.value_or(1), config.list_style);
    } else {
      prompt = builtin_template(config.template_name, config.list_style);
      if (config.required_sentences) {
        prompt = PromptTemplate::make(prompt.name, prompt.body, *config.required_sentences, prompt.list_style);
      }
    }

    auto records = load_corpus(config.input, corpus_format_for(config.input));
    GenerateOptions options;
    options.endpoint = {config.endpoint, config.api_key, config.model_name, config.temperature};
    options.prompt = prompt;
    options.retry = config.retry;
    options.seed = config.seed;
    options.max_in_flight = config.max_in_flight;

    GenerationStats stats;
    int status = kExitOk;
    try {
      stats = generate_summaries(records, transport, options);
    } catch (const Error& e) {
      // Whatever completed is still saved below.
      status = report_error(err, e);
    }
    save_corpus(records, config.output, corpus_format_for(config.output));
    fmt::print(out, "requests: {}, refusals: {}, exact: {}, subsampled: {}, short: {}, retries: {}\n",
               stats.total_requests, stats.refusals, stats.exact_compliance, stats.subsampled, stats.under_length,
               stats.retries);
    fmt::print(out, "{}\n", stats.summary_line());
    return status;
  });
}

int cmd_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_path, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const auto spec = load_synth_spec(spec_path);
    const auto corpus = synthesize(spec);
    save_corpus(corpus.records, out_path, corpus_format_for(out_path));
    write_text(truth_path_for(out_path), render_truth(spec, corpus));
    fmt::print(out, "wrote {} records to {}\n", corpus.records.size(), out_path.string());
    return kExitOk;
  });
}

int cmd_rouge(const std::filesystem::path& candidates, const std::filesystem::path& references, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const auto scores = corpus_rouge(read_lines(candidates), read_lines(references));
    fmt::print(out, "{:.4f}\t{:.4f}\t{:.4f}\n", scores.r1, scores.r2, scores.rl);
    return kExitOk;
  });
}

int cmd_stats(const std::filesystem::path& input, const SummarySource& source,
              const std::optional<std::filesystem::path>& abbrev_file, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    SentenceSplitter splitter;
    if (abbrev_file) splitter.load_abbreviations(abbrev_file->string());
    const auto records = load_corpus(input, corpus_format_for(input));
    const auto stats = corpus_stats(records, splitter, source);
    fmt::print(out, "articles: {}\n", stats.num_articles);
    fmt::print(out, "avg sentences per article: {:.4f}\n", stats.avg_sentences_per_article);
    fmt::print(out, "summary sentences: {}\n", stats.total_summary_sentences);
    fmt::print(out, "avg sentences per summary: {:.4f}\n", stats.avg_sentences_per_summary);
    return kExitOk;
  });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Position bias in summarization: map summary sentences to article segments and compare "
               "positional distributions."};
  app.name("posbias");
  app.require_subcommand(1);
  app.fallthrough();

  std::size_t workers = 1;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--out-dir", out_dir, "Output directory");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Measure position bias of model summaries against gold");
  std::string input;
  std::string format;
  std::string corpus_name;
  std::size_t k = 10;
  std::string phi = "tfidf";
  std::size_t top_n = 1;
  std::size_t k_prime = 3;
  std::string short_policy = "skip";
  std::string bins = "normalized";
  std::string aggregation = "pooled";
  std::string models;
  std::string correlation_metric = "all";
  std::string abbrev_file;
  analyze->add_option("--input,input", input, "Corpus file (jsonl or csv)")->required();
  analyze->add_option("--format", format, "Corpus format")->check(CLI::IsMember({"jsonl", "csv"}));
  analyze->add_option("--name", corpus_name, "Corpus name in reports (default: file stem)");
  analyze->add_option("--k", k, "Segments per article")->capture_default_str()->check(CLI::PositiveNumber);
  analyze->add_option("--phi", phi, "Mapping function")->capture_default_str()->check(CLI::IsMember({"tfidf", "rouge1"}));
  analyze->add_option("--top-n", top_n, "Article sentences credited per summary sentence")
      ->capture_default_str()
      ->check(CLI::Range(1, 3));
  analyze->add_option("--k-prime", k_prime, "Lead cutoff in sentences")->capture_default_str()->check(CLI::PositiveNumber);
  analyze->add_option("--short-article-policy", short_policy, "Articles with fewer than k sentences")
      ->capture_default_str()
      ->check(CLI::IsMember({"skip", "error"}));
  analyze->add_option("--bin-positions", bins, "Segment support positions")
      ->capture_default_str()
      ->check(CLI::IsMember({"normalized", "index"}));
  analyze->add_option("--aggregation", aggregation, "Corpus-level distribution")
      ->capture_default_str()
      ->check(CLI::IsMember({"pooled", "article-mean"}));
  analyze->add_option("--models", models, "Comma-separated model names (default: all)");
  analyze->add_option("--correlation-metric", correlation_metric, "ROUGE metric correlated with W")
      ->capture_default_str()
      ->check(CLI::IsMember({"r1", "r2", "rl", "all"}));
  analyze->add_option("--abbrev-file", abbrev_file, "Extra abbreviations, one per line");

  // generate
  auto* generate = app.add_subcommand("generate", "Fill in model summaries from a chat-completion endpoint");
  GenerateConfig gen;
  std::string gen_input;
  std::string gen_output;
  std::string template_file;
  std::string list_style = "dash";
  std::size_t required = 0;
  std::size_t max_attempts = gen.retry.max_attempts;
  long long backoff_ms = gen.retry.initial_backoff.count();
  generate->add_option("--input", gen_input, "Corpus to complete")->required();
  generate->add_option("--output", gen_output, "Where to write the completed corpus (default: --input)");
  generate->add_option("--endpoint", gen.endpoint, "Chat-completion URL")->required();
  generate->add_option("--model-name", gen.model_name, "Name stored in model_summaries and sent as model")->required();
  generate->add_option("--template", gen.template_name, "Built-in template: xsum, cnndm, reddit or news")
      ->capture_default_str()
      ->check(CLI::IsMember(builtin_template_names()));
  generate->add_option("--template-file", template_file, "Custom template containing {Article}");
  generate->add_option("--list-style", list_style, "Expected response format")
      ->capture_default_str()
      ->check(CLI::IsMember({"dash", "numbered", "plain"}));
  generate->add_option("--required-sentences", required, "Sentences per summary")->check(CLI::PositiveNumber);
  generate->add_option("--max-in-flight", gen.max_in_flight, "Concurrent requests")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  generate->add_option("--max-attempts", max_attempts, "Attempts per request")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  generate->add_option("--initial-backoff-ms", backoff_ms, "First retry delay")->capture_default_str();
  generate->add_option("--temperature", gen.temperature, "Sampling temperature")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with known positional ground truth");
  std::string spec_path;
  std::string synth_out;
  synth->add_option("--spec", spec_path, "Key-value spec file")->required();
  synth->add_option("--out", synth_out, "Corpus path (jsonl or csv by extension)")->required();

  // rouge
  auto* rouge = app.add_subcommand("rouge", "Corpus ROUGE-1/2/L F1 of line-aligned summary files");
  std::string candidates;
  std::string references;
  rouge->add_option("candidates", candidates, "One candidate summary per line")->required();
  rouge->add_option("references", references, "One reference summary per line")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "Sentence statistics of a corpus");
  std::string stats_input;
  std::string summary_source = "gold";
  std::string stats_abbrev;
  stats->add_option("--input,input", stats_input, "Corpus file")->required();
  stats->add_option("--summary-source", summary_source, "gold or model:<name>")->capture_default_str();
  stats->add_option("--abbrev-file", stats_abbrev, "Extra abbreviations, one per line");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (analyze->parsed()) {
    return guarded(err, [&] {
      AnalyzeConfig config;
      config.input = input;
      if (!format.empty()) config.format = parse_corpus_format(format);
      config.out_dir = out_dir;
      if (!abbrev_file.empty()) config.abbrev_file = abbrev_file;
      auto& o = config.options;
      o.corpus_name = corpus_name.empty() ? config.input.stem().string() : corpus_name;
      o.settings.k = k;
      o.settings.mapping.phi = parse_phi(phi);
      o.settings.mapping.top_n = top_n;
      o.settings.k_prime = k_prime;
      o.settings.short_articles = parse_short_article_policy(short_policy);
      o.settings.bins = parse_bin_positions(bins);
      o.settings.aggregation = parse_aggregation(aggregation);
      o.settings.seed = seed;
      o.models = split_list(models);
      if (correlation_metric != "all") o.correlation_metrics = {parse_rouge_metric(correlation_metric)};
      o.workers = workers;
      return cmd_analyze(config, out, err);
    });
  }
  if (generate->parsed()) {
    return guarded(err, [&] {
      gen.input = gen_input;
      gen.output = gen_output.empty() ? gen_input : gen_output;
      if (!template_file.empty()) gen.template_file = template_file;
      gen.list_style = parse_list_style(list_style);
      if (required > 0) gen.required_sentences = required;
      gen.seed = seed;
      gen.retry.max_attempts = max_attempts;
      gen.retry.initial_backoff = std::chrono::milliseconds(std::max(0LL, backoff_ms));
      if (const char* key = std::getenv("POSBIAS_API_KEY")) gen.api_key = key;
      HttpTransport transport;
      return cmd_generate(gen, transport, out, err);
    });
  }
  if (synth->parsed()) return cmd_synth(spec_path, synth_out, out, err);
  if (rouge->parsed()) return cmd_rouge(candidates, references, out, err);
  if (stats->parsed()) {
    return guarded(err, [&] {
      std::optional<std::filesystem::path> abbrev;
      if (!stats_abbrev.empty()) abbrev = stats_abbrev;
      return cmd_stats(stats_input, SummarySource::parse(summary_source), abbrev, out, err);
    });
  }
  return kExitConfig;
}

}  // namespace posbias::cli
