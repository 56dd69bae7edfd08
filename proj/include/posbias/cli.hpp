#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "posbias/corpus.hpp"
#include "posbias/llmclient.hpp"
#include "posbias/pipeline.hpp"

namespace posbias::cli {

// Process exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitRemote = 4;

struct AnalyzeConfig {
  std::filesystem::path input;
  std::optional<CorpusFormat> format;  // from the extension when unset
  std::filesystem::path out_dir = ".";
  std::optional<std::filesystem::path> abbrev_file;
  AnalyzeOptions options;
};

struct GenerateConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  std::string endpoint;
  std::string model_name;
  std::string template_name = "xsum";
  std::optional<std::filesystem::path> template_file;
  ListStyle list_style = ListStyle::dash_bulleted;
  std::optional<std::size_t> required_sentences;
  std::uint64_t seed = 0;
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
  double temperature = 0.0;
  std::string api_key;
};

// Names of the files cmd_analyze writes into the output directory.
inline constexpr const char* kAnalysisJson = "analysis.json";
inline constexpr const char* kDistributionSvg = "distributions.svg";
inline constexpr const char* kBiasBarsSvg = "bias_bars.svg";

/// Each command returns a process exit status and reports failures on `err`
/// as "posbias: <category>: <message>".
int cmd_analyze(const AnalyzeConfig& config, std::ostream& out, std::ostream& err);
int cmd_generate(const GenerateConfig& config, Transport& transport, std::ostream& out, std::ostream& err);
int cmd_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_path, std::ostream& out,
              std::ostream& err);
int cmd_rouge(const std::filesystem::path& candidates, const std::filesystem::path& references, std::ostream& out,
              std::ostream& err);
int cmd_stats(const std::filesystem::path& input, const SummarySource& source,
              const std::optional<std::filesystem::path>& abbrev_file, std::ostream& out, std::ostream& err);

// Sidecar written next to a synthetic corpus: "<out>.truth.json".
std::filesystem::path truth_path_for(const std::filesystem::path& corpus_path);

/// Parses `args` (without the program name) and dispatches to a
/// subcommand. The API key for `generate` comes from POSBIAS_API_KEY.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace posbias::cli
