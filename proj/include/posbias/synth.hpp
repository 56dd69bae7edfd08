#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "posbias/corpus.hpp"

namespace posbias {

enum class Allocation { deterministic_largest_remainder, seeded_random };

Allocation parse_allocation(std::string_view name);
std::string_view allocation_name(Allocation allocation);

/// Parameters of a synthetic corpus with known positional ground truth.
///
/// Sentence i of article a is built from words unique to (a, i), so every
/// summary sentence maps back to its source without ambiguity. Two optional
/// knobs add controlled noise: noise_words_per_sentence appends words drawn
/// from a small pool shared by the whole article, and token_dropout removes
/// that share of a copied sentence's words (at least one word survives).
struct SynthSpec {
  std::size_t num_articles = 0;
  std::size_t sentences_per_article = 0;
  std::size_t k = 10;
  std::vector<double> gold_target;
  std::map<std::string, std::vector<double>> model_targets;
  std::size_t summary_sentences_per_article = 1;
  Allocation allocation = Allocation::deterministic_largest_remainder;
  std::uint64_t seed = 0;

  std::size_t words_per_sentence = 6;
  std::size_t noise_words_per_sentence = 0;
  std::size_t noise_pool_size = 8;
  double token_dropout = 0.0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses "key = value" lines; '#' starts a comment. Vectors are
/// comma-separated reals and model targets use keys "model.<name>".
/// Throws ConfigError naming the field at fault.
SynthSpec parse_synth_spec(std::string_view text);
SynthSpec load_synth_spec(const std::filesystem::path& path);

// Integer apportionment of `total` by `weights` that preserves the total;
// leftover units go to the largest fractional parts, ties to lower index.
std::vector<std::size_t> largest_remainder(std::size_t total, const std::vector<double>& weights);

struct SynthCorpus {
  std::vector<CorpusRecord> records;
  // Realized source-segment counts per series (index j-1 is segment j).
  std::vector<std::size_t> gold_counts;
  std::map<std::string, std::vector<std::size_t>> model_counts;
};

SynthCorpus synthesize(const SynthSpec& spec);

std::vector<CorpusRecord> generate_synthetic(const SynthSpec& spec);

// JSON sidecar with the targets and realized counts.
std::string render_truth(const SynthSpec& spec, const SynthCorpus& corpus);

}  // namespace posbias
