#include "posbias/llmclient.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iterator>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "posbias/error.hpp"
#include "posbias/seeding.hpp"
#include "posbias/textproc.hpp"

namespace posbias {
namespace {

using nlohmann::json;

struct BuiltinPrompt {
  std::string_view dataset;
  std::size_t required;
  std::string_view dash;
  std::string_view numbered;
  std::string_view plain;
};

// Verbatim wording, "3 sentence" typo included.
constexpr BuiltinPrompt kBuiltinPrompts[] = {
    {"xsum", 1,
     "For the following article: {Article}. Return a summary comprising of 1 sentence. "
     "Write the sentence in a dash bulleted format.",
     "For the following article: {Article}. Return a summary comprising of 1 sentence. "
     "Write the sentence in a numbered list format.\nFor example:\n1. First sentence",
     "Generate a 1 sentence summary for the given article. Article: {Article}."},
    {"cnndm", 3,
     "For the following article: {Article}. Return a summary comprising of 3 sentences. "
     "Write each sentence in a dash bulleted format.",
     "For the following article: {Article}. Return a summary comprising of 3 sentence. "
     "Write the sentence in a numbered list format.\nFor example:\n1. First sentence\n"
     "2. Second sentence\n3. Third sentence",
     "Generate a 3 sentence summary for the given article. Article: {Article}."},
    {"reddit", 1,
     "For the following article: {Article}. Return a summary comprising of 1 sentence. "
     "Write the sentence in a dash bulleted format.",
     "For the following article: {Article}. Return a summary comprising of 1 sentence. "
     "Write the sentence in a numbered list format.\nFor example:\n1. First sentence",
     "Generate a 1 sentence summary for the given article. Article: {Article}."},
    {"news", 1,
     "For the following article: {Article}. Return a summary comprising of 1 sentence. "
     "Write the sentence in a dash bulleted format.",
     "For the following article: {Article}. Return a summary comprising of 1 sentence. "
     "Write the sentence in a numbered list format.\nFor example:\n1. First sentence",
     "Generate a 1 sentence summary for the given article. Article: {Article}."},
};

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return lines;
}

bool contains_any(std::string_view body, std::initializer_list<std::string_view> needles) {
  return std::any_of(needles.begin(), needles.end(),
                     [&](std::string_view n) { return body.find(n) != std::string_view::npos; });
}

// Completion text and whether the provider flagged it as filtered. Bodies
// that are not chat/completion JSON pass through unchanged.
std::pair<std::string, bool> extract_completion(const std::string& body) {
  auto parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) return {body, false};
  auto choices = parsed.find("choices");
  if (choices == parsed.end() || !choices->is_array() || choices->empty()) {
    if (auto text = parsed.find("text"); text != parsed.end() && text->is_string()) return {text->get<std::string>(), false};
    return {body, false};
  }
  const auto& choice = choices->front();
  bool filtered = false;
  if (auto reason = choice.find("finish_reason"); reason != choice.end() && reason->is_string()) {
    filtered = reason->get<std::string>() == "content_filter";
  }
  if (auto message = choice.find("message"); message != choice.end() && message->is_object()) {
    auto content = message->find("content");
    if (content != message->end() && content->is_string()) return {content->get<std::string>(), filtered};
    return {std::string(), filtered};
  }
  if (auto text = choice.find("text"); text != choice.end() && text->is_string()) {
    return {text->get<std::string>(), filtered};
  }
  return {std::string(), filtered};
}

bool transient_status(int status) { return status == 408 || status == 429 || (status >= 500 && status <= 599); }

bool moderation_refusal(const HttpResponse& response) {
  if (response.status == 451) return true;
  return response.status == 400 &&
         contains_any(response.body, {"content_filter", "content_policy", "content_management_policy", "moderation"});
}

void classify(const std::vector<std::string>& parsed, std::size_t required, GenerationStats& stats) {
  if (parsed.size() == required) {
    ++stats.exact_compliance;
  } else if (parsed.size() > required) {
    ++stats.subsampled;
  } else {
    ++stats.under_length;
  }
}

}  // namespace

ListStyle parse_list_style(std::string_view name) {
  if (name == "dash" || name == "dash_bulleted") return ListStyle::dash_bulleted;
  if (name == "numbered") return ListStyle::numbered;
  if (name == "plain") return ListStyle::plain;
  throw ConfigError(fmt::format("unknown list style '{}' (expected dash, numbered or plain)", name));
}

std::string_view list_style_name(ListStyle style) {
  switch (style) {
    case ListStyle::dash_bulleted:
      return "dash";
    case ListStyle::numbered:
      return "numbered";
    case ListStyle::plain:
      return "plain";
  }
  return "";
}

PromptTemplate PromptTemplate::make(std::string name, std::string body, std::size_t required_sentences,
                                    ListStyle style) {
  const auto placeholders = count_occurrences(body, kArticlePlaceholder);
  if (placeholders != 1) {
    throw ConfigError(fmt::format("template '{}' must contain exactly one {} placeholder, found {}", name,
                                  kArticlePlaceholder, placeholders));
  }
  if (required_sentences == 0) throw ConfigError(fmt::format("template '{}' must require at least 1 sentence", name));
  return PromptTemplate{std::move(name), std::move(body), required_sentences, style};
}

PromptTemplate builtin_template(std::string_view dataset, ListStyle style) {
  for (const auto& prompt : kBuiltinPrompts) {
    if (prompt.dataset != dataset) continue;
    const auto body = style == ListStyle::dash_bulleted ? prompt.dash
                      : style == ListStyle::numbered    ? prompt.numbered
                                                        : prompt.plain;
    return PromptTemplate::make(std::string(dataset), std::string(body), prompt.required, style);
  }
  throw ConfigError(fmt::format("no built-in template named '{}' (expected xsum, cnndm, reddit or news)", dataset));
}

std::vector<std::string> builtin_template_names() {
  std::vector<std::string> names;
  for (const auto& prompt : kBuiltinPrompts) names.emplace_back(prompt.dataset);
  return names;
}

PromptTemplate load_template(const std::filesystem::path& path, std::size_t required_sentences, ListStyle style) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open template file '{}'", path.string()));
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
  return PromptTemplate::make(path.stem().string(), std::move(body), required_sentences, style);
}

std::string render_prompt(const PromptTemplate& prompt, std::string_view article) {
  if (trim(article).empty()) throw DataError("cannot render a prompt for an empty article");
  const auto pos = prompt.body.find(kArticlePlaceholder);
  if (pos == std::string::npos) throw ConfigError(fmt::format("template '{}' has no placeholder", prompt.name));
  std::string out;
  out.reserve(prompt.body.size() + article.size());
  out.append(prompt.body, 0, pos);
  out.append(article);
  out.append(prompt.body, pos + kArticlePlaceholder.size());
  return out;
}

std::vector<std::string> parse_listed_sentences(std::string_view response, ListStyle style) {
  if (style == ListStyle::plain) return split_sentences(response).sentences;
  std::vector<std::string> items;
  for (auto line : lines_of(response)) {
    line = trim(line);
    std::string_view item;
    if (style == ListStyle::dash_bulleted) {
      if (!line.starts_with('-')) continue;
      item = trim(line.substr(1));
    } else {
      std::size_t digits = 0;
      while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') ++digits;
      if (digits == 0 || digits + 1 >= line.size() || line[digits] != '.' ||
          (line[digits + 1] != ' ' && line[digits + 1] != '\t')) {
        continue;
      }
      item = trim(line.substr(digits + 1));
    }
    if (!item.empty()) items.emplace_back(item);
  }
  return items;
}

std::vector<std::string> subsample_sentences(const std::vector<std::string>& sentences, std::size_t required,
                                             std::uint64_t seed) {
  if (required == 0) throw std::invalid_argument("required sentence count must be at least 1");
  if (sentences.size() <= required) return sentences;
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  out.reserve(required);
  std::sample(sentences.begin(), sentences.end(), std::back_inserter(out), required, rng);
  return out;
}

std::string join_summary_sentences(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& sentence : sentences) {
    auto text = trim(sentence);
    if (text.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out.append(text);
    const char last = text.back();
    if (last != '.' && last != '!' && last != '?' && last != '"' && last != '\'' && last != ')') out.push_back('.');
  }
  return out;
}

double GenerationStats::compliance_percent() const {
  return total_requests == 0 ? 0.0 : 100.0 * static_cast<double>(exact_compliance) / static_cast<double>(total_requests);
}

double GenerationStats::refusal_percent() const {
  return total_requests == 0 ? 0.0 : 100.0 * static_cast<double>(refusals) / static_cast<double>(total_requests);
}

void GenerationStats::merge(const GenerationStats& other) {
  total_requests += other.total_requests;
  refusals += other.refusals;
  exact_compliance += other.exact_compliance;
  subsampled += other.subsampled;
  under_length += other.under_length;
  retries += other.retries;
}

std::string GenerationStats::summary_line() const {
  return fmt::format("exact compliance: {:.1f}%, refusals: {:.1f}%", compliance_percent(), refusal_percent());
}

HttpResponse HttpTransport::post(const std::string& url, const std::string& body,
                                 const std::map<std::string, std::string>& headers) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError(fmt::format("endpoint '{}' has no scheme", url));
  const auto path_start = url.find('/', scheme_end + 3);
  const auto base = url.substr(0, path_start);
  const auto path = path_start == std::string::npos ? std::string("/") : url.substr(path_start);

  httplib::Client client(base);
  if (!client.is_valid()) throw ConfigError(fmt::format("unsupported endpoint '{}'", url));
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers request_headers;
  for (const auto& [key, value] : headers) request_headers.emplace(key, value);
  auto result = client.Post(path, request_headers, body, "application/json");
  if (!result) throw TransportFailure(fmt::format("{}: {}", url, httplib::to_string(result.error())));
  return {result->status, result->body};
}

std::chrono::milliseconds RetryPolicy::backoff_before(std::size_t retry) const {
  const double scaled = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, static_cast<double>(retry - 1));
  const auto capped = std::min(scaled, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

std::string chat_request_body(const Endpoint& endpoint, std::string_view prompt) {
  json body;
  body["model"] = endpoint.model;
  body["messages"] = json::array({json{{"role", "user"}, {"content", std::string(prompt)}}});
  body["temperature"] = endpoint.temperature;
  return body.dump();
}

SummaryResponse request_summary(Transport& transport, const Endpoint& endpoint, std::string_view prompt,
                                const RetryPolicy& policy, const Sleeper& sleeper) {
  if (endpoint.api_key.empty()) throw AuthError("no API token configured");
  const auto attempts = std::max<std::size_t>(policy.max_attempts, 1);
  const auto body = chat_request_body(endpoint, prompt);
  const std::map<std::string, std::string> headers{{"Authorization", "Bearer " + endpoint.api_key}};

  SummaryResponse out;
  std::string last_failure;
  for (std::size_t attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) {
      ++out.retries;
      const auto delay = policy.backoff_before(attempt - 1);
      if (sleeper) {
        sleeper(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    }
    HttpResponse response;
    try {
      response = transport.post(endpoint.url, body, headers);
    } catch (const TransportFailure& e) {
      last_failure = e.what();
      continue;
    }
    if (response.status == 401 || response.status == 403) {
      throw AuthError(fmt::format("endpoint rejected credentials (HTTP {})", response.status));
    }
    if (moderation_refusal(response)) {
      out.refused = true;
      return out;
    }
    if (transient_status(response.status)) {
      last_failure = fmt::format("HTTP {}", response.status);
      continue;
    }
    if (response.status < 200 || response.status >= 300) {
      throw RemoteError(fmt::format("endpoint returned HTTP {}: {}", response.status, response.body.substr(0, 200)));
    }
    auto [text, filtered] = extract_completion(response.body);
    out.refused = filtered || trim(text).empty();
    if (!out.refused) out.text = std::move(text);
    return out;
  }
  throw RemoteError(fmt::format("request failed after {} attempts: {}", attempts, last_failure));
}

GenerationStats generate_summaries(std::vector<CorpusRecord>& records, Transport& transport,
                                   const GenerateOptions& options) {
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].model_summaries.contains(options.endpoint.model)) pending.push_back(i);
  }

  std::vector<std::string> summaries(pending.size());
  std::vector<GenerationStats> per_item(pending.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};

  auto worker = [&] {
    while (!failed.load()) {
      const auto slot = next.fetch_add(1);
      if (slot >= pending.size()) return;
      const auto index = pending[slot];
      try {
        auto& stats = per_item[slot];
        const auto prompt = render_prompt(options.prompt, records[index].article);
        auto response = request_summary(transport, options.endpoint, prompt, options.retry, options.sleeper);
        ++stats.total_requests;
        stats.retries += response.retries;
        if (response.refused) {
          ++stats.refusals;
          continue;
        }
        auto parsed = parse_listed_sentences(response.text, options.prompt.list_style);
        if (parsed.empty()) parsed = split_sentences(response.text).sentences;
        classify(parsed, options.prompt.required_sentences, stats);
        const auto seed = derive_seed(options.seed, index);
        summaries[slot] = join_summary_sentences(subsample_sentences(parsed, options.prompt.required_sentences, seed));
        if (summaries[slot].empty()) {
          // Nothing usable survived parsing; account it as a refusal.
          --stats.under_length;
          ++stats.refusals;
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
      }
    }
  };

  const auto workers = std::clamp<std::size_t>(options.max_in_flight, 1, std::max<std::size_t>(pending.size(), 1));
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  GenerationStats stats;
  for (std::size_t slot = 0; slot < pending.size(); ++slot) {
    stats.merge(per_item[slot]);
    if (per_item[slot].total_requests > 0) {
      records[pending[slot]].model_summaries[options.endpoint.model] = std::move(summaries[slot]);
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return stats;
}

}  // namespace posbias
