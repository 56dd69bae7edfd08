#include "posbias/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "posbias/error.hpp"
#include "posbias/posmap.hpp"
#include "posbias/seeding.hpp"

namespace posbias {
namespace {

constexpr double kTargetTolerance = 1e-12;
constexpr std::string_view kModelKeyPrefix = "model.";

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::uint64_t parse_unsigned(std::string_view field, std::string_view value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", field, value));
  }
  return out;
}

double parse_real(std::string_view field, std::string_view value) {
  std::string text(trim(value));
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (text.empty() || used != text.size() || !std::isfinite(out)) {
    throw ConfigError(fmt::format("{}: expected a real number, got '{}'", field, value));
  }
  return out;
}

std::vector<double> parse_vector(std::string_view field, std::string_view value) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    auto end = value.find(',', pos);
    if (end == std::string_view::npos) end = value.size();
    out.push_back(parse_real(field, value.substr(pos, end - pos)));
    pos = end + 1;
  }
  return out;
}

void check_target(std::string_view field, const std::vector<double>& target, std::size_t k) {
  if (target.size() != k) {
    throw ConfigError(fmt::format("{}: expected {} probabilities (one per segment), got {}", field, k, target.size()));
  }
  for (double p : target) {
    if (!(p >= 0.0)) throw ConfigError(fmt::format("{}: probabilities must be non-negative", field));
  }
  const double sum = std::accumulate(target.begin(), target.end(), 0.0);
  if (std::abs(sum - 1.0) > kTargetTolerance) {
    throw ConfigError(fmt::format("{}: probabilities sum to {}, expected 1", field, sum));
  }
}

std::string sentence_text(std::vector<std::string> words) {
  std::string out;
  for (const auto& word : words) {
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] = static_cast<char>(out[0] - 'a' + 'A');
  out.push_back('.');
  return out;
}

struct Article {
  std::vector<std::vector<std::string>> words;  // per sentence
  SegmentationPlan plan;
};

Article build_article(const SynthSpec& spec, std::size_t a) {
  Article article;
  article.plan = segment_article(spec.sentences_per_article, spec.k);
  std::mt19937_64 rng(derive_seed(spec.seed, 2 * a));
  std::uniform_int_distribution<std::size_t> pool(0, std::max<std::size_t>(spec.noise_pool_size, 1) - 1);
  for (std::size_t i = 0; i < spec.sentences_per_article; ++i) {
    std::vector<std::string> words;
    for (std::size_t w = 0; w < spec.words_per_sentence; ++w) words.push_back(fmt::format("a{}s{}w{}", a, i, w));
    for (std::size_t w = 0; w < spec.noise_words_per_sentence; ++w) words.push_back(fmt::format("a{}n{}", a, pool(rng)));
    article.words.push_back(std::move(words));
  }
  return article;
}

std::vector<std::string> drop_words(const std::vector<std::string>& words, double dropout, std::mt19937_64& rng) {
  if (dropout <= 0.0) return words;
  std::bernoulli_distribution drop(dropout);
  std::vector<std::string> kept;
  for (const auto& word : words) {
    if (!drop(rng)) kept.push_back(word);
  }
  if (kept.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    kept.push_back(words[pick(rng)]);
  }
  return kept;
}

// Source segment (0-based) for every summary slot of one series.
std::vector<std::size_t> allocate_segments(const SynthSpec& spec, const std::vector<double>& target,
                                           std::uint64_t stream) {
  const std::size_t per_article = spec.summary_sentences_per_article;
  const std::size_t total = spec.num_articles * per_article;
  std::vector<std::size_t> slots;
  slots.reserve(total);
  if (spec.allocation == Allocation::deterministic_largest_remainder) {
    const auto counts = largest_remainder(total, target);
    for (std::size_t j = 0; j < counts.size(); ++j) slots.insert(slots.end(), counts[j], j);
    std::mt19937_64 rng(derive_seed(spec.seed, stream));
    std::shuffle(slots.begin(), slots.end(), rng);
  } else {
    for (std::size_t a = 0; a < spec.num_articles; ++a) {
      std::mt19937_64 rng(derive_seed(derive_seed(spec.seed, stream), a));
      std::discrete_distribution<std::size_t> draw(target.begin(), target.end());
      for (std::size_t s = 0; s < per_article; ++s) slots.push_back(draw(rng));
    }
  }
  return slots;
}

std::string make_summary(const SynthSpec& spec, const Article& article, std::span<const std::size_t> segments,
                         std::mt19937_64& rng) {
  std::string summary;
  for (auto segment : segments) {
    const auto& interval = article.plan.intervals[segment];
    std::uniform_int_distribution<std::size_t> pick(interval.first, interval.last);
    const auto source = pick(rng);
    if (!summary.empty()) summary.push_back(' ');
    summary += sentence_text(drop_words(article.words[source], spec.token_dropout, rng));
  }
  return summary;
}

}  // namespace

Allocation parse_allocation(std::string_view name) {
  if (name == "deterministic" || name == "deterministic_largest_remainder") {
    return Allocation::deterministic_largest_remainder;
  }
  if (name == "seeded_random" || name == "random") return Allocation::seeded_random;
  throw ConfigError(fmt::format("allocation: unknown value '{}' (expected deterministic or seeded_random)", name));
}

std::string_view allocation_name(Allocation allocation) {
  return allocation == Allocation::deterministic_largest_remainder ? "deterministic_largest_remainder"
                                                                   : "seeded_random";
}

void SynthSpec::validate() const {
  if (num_articles == 0) throw ConfigError("num_articles: must be at least 1");
  if (k == 0) throw ConfigError("k: must be at least 1");
  if (sentences_per_article < k) {
    throw ConfigError(fmt::format("sentences_per_article: {} is smaller than k = {}", sentences_per_article, k));
  }
  if (summary_sentences_per_article == 0) throw ConfigError("summary_sentences_per_article: must be at least 1");
  if (words_per_sentence == 0) throw ConfigError("words_per_sentence: must be at least 1");
  if (noise_words_per_sentence > 0 && noise_pool_size == 0) throw ConfigError("noise_pool_size: must be at least 1");
  if (!(token_dropout >= 0.0 && token_dropout < 1.0)) throw ConfigError("token_dropout: must lie in [0, 1)");
  check_target("gold_target", gold_target, k);
  for (const auto& [name, target] : model_targets) {
    if (name.empty()) throw ConfigError("model.: model name is empty");
    check_target(std::string(kModelKeyPrefix) + name, target, k);
  }
}

SynthSpec parse_synth_spec(std::string_view text) {
  SynthSpec spec;
  std::set<std::string, std::less<>> seen;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!seen.emplace(key).second) throw ConfigError(fmt::format("{}: given more than once", key));

    if (key == "num_articles") {
      spec.num_articles = parse_unsigned(key, value);
    } else if (key == "sentences_per_article") {
      spec.sentences_per_article = parse_unsigned(key, value);
    } else if (key == "k") {
      spec.k = parse_unsigned(key, value);
    } else if (key == "gold_target") {
      spec.gold_target = parse_vector(key, value);
    } else if (key.starts_with(kModelKeyPrefix)) {
      spec.model_targets[std::string(key.substr(kModelKeyPrefix.size()))] = parse_vector(key, value);
    } else if (key == "summary_sentences_per_article") {
      spec.summary_sentences_per_article = parse_unsigned(key, value);
    } else if (key == "allocation") {
      spec.allocation = parse_allocation(value);
    } else if (key == "seed") {
      spec.seed = parse_unsigned(key, value);
    } else if (key == "words_per_sentence") {
      spec.words_per_sentence = parse_unsigned(key, value);
    } else if (key == "noise_words_per_sentence") {
      spec.noise_words_per_sentence = parse_unsigned(key, value);
    } else if (key == "noise_pool_size") {
      spec.noise_pool_size = parse_unsigned(key, value);
    } else if (key == "token_dropout") {
      spec.token_dropout = parse_real(key, value);
    } else {
      throw ConfigError(fmt::format("{}: unknown field", key));
    }
  }
  for (std::string_view required : {"num_articles", "sentences_per_article", "k", "gold_target"}) {
    if (!seen.contains(required)) throw ConfigError(fmt::format("{}: missing", required));
  }
  spec.validate();
  return spec;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open spec file '{}'", path.string()));
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_synth_spec(text);
}

std::vector<std::size_t> largest_remainder(std::size_t total, const std::vector<double>& weights) {
  const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> counts(weights.size(), 0);
  if (weights.empty() || weight_sum <= 0.0) return counts;
  std::vector<double> fraction(weights.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    double quota = static_cast<double>(total) * weights[j] / weight_sum;
    // Quotas a rounding error away from an integer are that integer.
    if (std::abs(quota - std::round(quota)) < 1e-9) quota = std::round(quota);
    counts[j] = static_cast<std::size_t>(std::floor(quota));
    fraction[j] = quota - std::floor(quota);
    assigned += counts[j];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fraction[a] > fraction[b]; });
  for (std::size_t i = 0; assigned < total && i < order.size(); ++i, ++assigned) ++counts[order[i]];
  return counts;
}

SynthCorpus synthesize(const SynthSpec& spec) {
  spec.validate();
  SynthCorpus out;
  const std::size_t per_article = spec.summary_sentences_per_article;

  // Stream 0 is gold; models follow in name order.
  std::vector<std::vector<std::size_t>> series_slots;
  series_slots.push_back(allocate_segments(spec, spec.gold_target, 0));
  std::uint64_t stream = 1;
  for (const auto& [name, target] : spec.model_targets) series_slots.push_back(allocate_segments(spec, target, stream++));

  const auto tally = [&](const std::vector<std::size_t>& slots) {
    std::vector<std::size_t> counts(spec.k, 0);
    for (auto segment : slots) ++counts[segment];
    return counts;
  };
  out.gold_counts = tally(series_slots[0]);
  {
    std::size_t s = 1;
    for (const auto& [name, target] : spec.model_targets) out.model_counts[name] = tally(series_slots[s++]);
  }

  const auto id_width = std::to_string(spec.num_articles - 1).size();
  out.records.reserve(spec.num_articles);
  for (std::size_t a = 0; a < spec.num_articles; ++a) {
    const auto article = build_article(spec, a);
    CorpusRecord record;
    record.id = fmt::format("synth-{:0{}}", a, id_width);
    std::vector<std::string> sentences;
    for (const auto& words : article.words) sentences.push_back(sentence_text(words));
    record.article = fmt::format("{}", fmt::join(sentences, " "));

    std::mt19937_64 rng(derive_seed(spec.seed, 2 * a + 1));
    const auto slice = [&](std::size_t series) {
      return std::span<const std::size_t>(series_slots[series]).subspan(a * per_article, per_article);
    };
    record.gold_summary = make_summary(spec, article, slice(0), rng);
    std::size_t s = 1;
    for (const auto& [name, target] : spec.model_targets) {
      record.model_summaries[name] = make_summary(spec, article, slice(s++), rng);
    }
    out.records.push_back(std::move(record));
  }
  return out;
}

std::vector<CorpusRecord> generate_synthetic(const SynthSpec& spec) { return synthesize(spec).records; }

std::string render_truth(const SynthSpec& spec, const SynthCorpus& corpus) {
  nlohmann::ordered_json truth;
  truth["k"] = spec.k;
  truth["allocation"] = allocation_name(spec.allocation);
  truth["seed"] = spec.seed;
  truth["gold_target"] = spec.gold_target;
  truth["gold_counts"] = corpus.gold_counts;
  truth["model_targets"] = nlohmann::ordered_json::object();
  truth["model_counts"] = nlohmann::ordered_json::object();
  for (const auto& [name, target] : spec.model_targets) {
    truth["model_targets"][name] = target;
    truth["model_counts"][name] = corpus.model_counts.at(name);
  }
  return truth.dump(2) + "\n";
}

}  // namespace posbias
