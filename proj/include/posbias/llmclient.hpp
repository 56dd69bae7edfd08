#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "posbias/corpus.hpp"

namespace posbias {

enum class ListStyle { dash_bulleted, numbered, plain };

ListStyle parse_list_style(std::string_view name);
std::string_view list_style_name(ListStyle style);

inline constexpr std::string_view kArticlePlaceholder = "{Article}";

struct PromptTemplate {
  std::string name;
  std::string body;
  std::size_t required_sentences = 1;
  ListStyle list_style = ListStyle::dash_bulleted;

  /// Throws ConfigError unless body holds exactly one {Article} and
  /// required_sentences >= 1.
  static PromptTemplate make(std::string name, std::string body, std::size_t required_sentences,
                             ListStyle style);
};

/// Built-in prompts for the xsum, cnndm, reddit and news datasets. The dash
/// style is the bulleted wording, numbered adds a numbered-list exemplar and
/// plain is the short "Generate a N sentence summary" form.
PromptTemplate builtin_template(std::string_view dataset, ListStyle style = ListStyle::dash_bulleted);

std::vector<std::string> builtin_template_names();

// The whole file is the template body; name is the file stem.
PromptTemplate load_template(const std::filesystem::path& path, std::size_t required_sentences, ListStyle style);

/// Replaces the placeholder with the article verbatim. Throws DataError for
/// an empty article.
std::string render_prompt(const PromptTemplate& prompt, std::string_view article);

/// Items of a list-formatted response. Dash style keeps lines starting
/// with "-", numbered style keeps lines matching "<digits>. ", plain style
/// runs the sentence splitter. Markers are stripped and any preamble or
/// trailing chatter is ignored.
std::vector<std::string> parse_listed_sentences(std::string_view response, ListStyle style);

/// Keeps `required` sentences chosen uniformly without replacement,
/// preserving their original order. Returns everything when there are not
/// more than `required`.
std::vector<std::string> subsample_sentences(const std::vector<std::string>& sentences, std::size_t required,
                                             std::uint64_t seed);

// Space-joined sentences, each given terminal punctuation if it has none so
// that the stored summary re-splits into the same sentences.
std::string join_summary_sentences(const std::vector<std::string>& sentences);

struct GenerationStats {
  std::size_t total_requests = 0;
  std::size_t refusals = 0;
  std::size_t exact_compliance = 0;
  std::size_t subsampled = 0;
  std::size_t under_length = 0;
  std::size_t retries = 0;

  std::size_t parsed_responses() const noexcept { return total_requests - refusals; }
  // Shares of total_requests, in percent.
  double compliance_percent() const;
  double refusal_percent() const;
  void merge(const GenerationStats& other);
  // "exact compliance: P%, refusals: Q%"
  std::string summary_line() const;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Connection-level failure (no HTTP status).
class TransportFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Must be safe to call from several threads. Throws TransportFailure.
  virtual HttpResponse post(const std::string& url, const std::string& body,
                            const std::map<std::string, std::string>& headers) = 0;
};

// cpp-httplib client; https needs a build with OpenSSL.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(std::chrono::seconds timeout = std::chrono::seconds(120)) : timeout_(timeout) {}
  HttpResponse post(const std::string& url, const std::string& body,
                    const std::map<std::string, std::string>& headers) override;

 private:
  std::chrono::seconds timeout_;
};

struct Endpoint {
  std::string url;
  std::string api_key;
  std::string model;
  double temperature = 0.0;
};

struct RetryPolicy {
  std::size_t max_attempts = 4;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  std::chrono::milliseconds backoff_before(std::size_t retry) const;  // retry is 1-based
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct SummaryResponse {
  bool refused = false;
  std::string text;
  std::size_t retries = 0;
};

/// Chat-completion request body: one user message, no system prompt.
std::string chat_request_body(const Endpoint& endpoint, std::string_view prompt);

/// Sends one prompt. Moderation refusals (HTTP 451, a 400 naming a content
/// filter or policy, finish_reason "content_filter") and empty completions
/// come back with refused set. Connection failures, 408, 429 and 5xx are
/// retried with exponential backoff. Throws AuthError on 401/403 and
/// RemoteError once retries are exhausted or on any other status.
SummaryResponse request_summary(Transport& transport, const Endpoint& endpoint, std::string_view prompt,
                                const RetryPolicy& policy, const Sleeper& sleeper = {});

struct GenerateOptions {
  Endpoint endpoint;
  PromptTemplate prompt;
  RetryPolicy retry;
  std::uint64_t seed = 0;
  std::size_t max_in_flight = 4;
  Sleeper sleeper;
};

/// Fills model_summaries[endpoint.model] for every record that has no entry
/// yet, with at most max_in_flight requests outstanding. Over-long
/// responses are subsampled with a per-record seed derived from `seed` and
/// the record position. Refusals are stored as empty summaries.
GenerationStats generate_summaries(std::vector<CorpusRecord>& records, Transport& transport,
                                   const GenerateOptions& options);

}  // namespace posbias
