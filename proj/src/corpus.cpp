#include "posbias/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "posbias/error.hpp"

namespace posbias {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::string_view kModelColumnPrefix = "model:";

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
    } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
      extra = 3;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError(fmt::format("read failure on '{}'", path.string()));
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << content;
  out.flush();
  if (!out) throw IoError(fmt::format("write failure on '{}'", path.string()));
}

std::string string_field(const json& object, const char* key, std::size_t line) {
  auto it = object.find(key);
  if (it == object.end()) throw DataError(fmt::format("line {}: missing field '{}'", line, key));
  if (!it->is_string()) throw DataError(fmt::format("line {}: field '{}' must be a string", line, key));
  return it->get<std::string>();
}

CorpusRecord parse_json_record(std::string_view line, std::size_t line_no) {
  json object;
  try {
    object = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("line {}: malformed JSON ({})", line_no, e.what()));
  }
  if (!object.is_object()) throw DataError(fmt::format("line {}: expected a JSON object", line_no));
  for (const auto& [key, value] : object.items()) {
    if (key != "id" && key != "article" && key != "gold_summary" && key != "model_summaries") {
      throw DataError(fmt::format("line {}: unknown field '{}'", line_no, key));
    }
  }
  CorpusRecord record;
  record.id = string_field(object, "id", line_no);
  record.article = string_field(object, "article", line_no);
  record.gold_summary = string_field(object, "gold_summary", line_no);
  if (auto it = object.find("model_summaries"); it != object.end()) {
    if (!it->is_object()) {
      throw DataError(fmt::format("line {}: field 'model_summaries' must be an object", line_no));
    }
    for (const auto& [name, text] : it->items()) {
      if (!text.is_string()) {
        throw DataError(fmt::format("line {}: model summary '{}' must be a string", line_no, name));
      }
      record.model_summaries.emplace(name, text.get<std::string>());
    }
  }
  return record;
}

void check_record(const CorpusRecord& record, std::size_t line_no) {
  const auto where = line_no > 0 ? fmt::format("line {}: ", line_no) : std::string();
  if (record.id.empty()) throw DataError(where + "empty id");
  if (blank(record.article)) throw DataError(where + fmt::format("record '{}' has an empty article", record.id));
  if (blank(record.gold_summary)) {
    throw DataError(where + fmt::format("record '{}' has an empty gold summary", record.id));
  }
}

std::vector<CorpusRecord> load_jsonl(const std::string& content) {
  std::vector<CorpusRecord> records;
  std::set<std::string, std::less<>> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string::npos) end = content.size();
    std::string_view line(content.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (blank(line)) continue;
    auto record = parse_json_record(line, line_no);
    check_record(record, line_no);
    if (!ids.insert(record.id).second) {
      throw DataError(fmt::format("line {}: duplicate id '{}'", line_no, record.id));
    }
    records.push_back(std::move(record));
  }
  return records;
}

// RFC 4180 cell. `quoted` separates "" (empty text) from an absent value.
struct CsvCell {
  std::string text;
  bool quoted = false;
};

struct CsvRow {
  std::vector<CsvCell> cells;
  std::size_t line = 0;
};

std::vector<CsvRow> parse_csv(const std::string& content) {
  std::vector<CsvRow> rows;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = content.size();
  while (i < n) {
    CsvRow row;
    row.line = line;
    bool row_done = false;
    while (!row_done) {
      CsvCell cell;
      if (i < n && content[i] == '"') {
        cell.quoted = true;
        ++i;
        bool closed = false;
        while (i < n) {
          const char c = content[i];
          if (c == '"') {
            if (i + 1 < n && content[i + 1] == '"') {
              cell.text.push_back('"');
              i += 2;
            } else {
              ++i;
              closed = true;
              break;
            }
          } else {
            if (c == '\n') ++line;
            cell.text.push_back(c);
            ++i;
          }
        }
        if (!closed) throw DataError(fmt::format("line {}: unterminated quoted field", row.line));
        if (i < n && content[i] != ',' && content[i] != '\n' && content[i] != '\r') {
          throw DataError(fmt::format("line {}: unexpected character after quoted field", line));
        }
      } else {
        while (i < n && content[i] != ',' && content[i] != '\n' && content[i] != '\r') {
          if (content[i] == '"') throw DataError(fmt::format("line {}: stray quote in unquoted field", line));
          cell.text.push_back(content[i++]);
        }
      }
      row.cells.push_back(std::move(cell));
      if (i < n && content[i] == ',') {
        ++i;
      } else {
        if (i < n && content[i] == '\r') ++i;
        if (i < n && content[i] == '\n') ++i;
        ++line;
        row_done = true;
      }
    }
    const bool empty_line = row.cells.size() == 1 && !row.cells[0].quoted && row.cells[0].text.empty();
    if (!empty_line) rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<CorpusRecord> load_csv(const std::string& content) {
  if (!valid_utf8(content)) throw DataError("file is not valid UTF-8");
  auto rows = parse_csv(content);
  if (rows.empty()) return {};
  const auto& header = rows.front();
  if (header.cells.size() < 3 || header.cells[0].text != "id" || header.cells[1].text != "article" ||
      header.cells[2].text != "gold_summary") {
    throw DataError(fmt::format("line {}: csv header must start with id,article,gold_summary", header.line));
  }
  std::vector<std::string> models;
  for (std::size_t c = 3; c < header.cells.size(); ++c) {
    const auto& name = header.cells[c].text;
    if (!name.starts_with(kModelColumnPrefix) || name.size() == kModelColumnPrefix.size()) {
      throw DataError(fmt::format("line {}: unexpected column '{}'", header.line, name));
    }
    models.push_back(name.substr(kModelColumnPrefix.size()));
  }

  std::vector<CorpusRecord> records;
  std::set<std::string, std::less<>> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto& row = rows[r];
    if (row.cells.size() != header.cells.size()) {
      throw DataError(fmt::format("line {}: expected {} fields, found {}", row.line, header.cells.size(),
                                  row.cells.size()));
    }
    CorpusRecord record;
    record.id = std::move(row.cells[0].text);
    record.article = std::move(row.cells[1].text);
    record.gold_summary = std::move(row.cells[2].text);
    for (std::size_t m = 0; m < models.size(); ++m) {
      auto& cell = row.cells[m + 3];
      if (cell.quoted || !cell.text.empty()) record.model_summaries.emplace(models[m], std::move(cell.text));
    }
    check_record(record, row.line);
    if (!ids.insert(record.id).second) throw DataError(fmt::format("line {}: duplicate id '{}'", row.line, record.id));
    records.push_back(std::move(record));
  }
  return records;
}

void append_csv_cell(std::string& out, std::string_view text, bool force_quotes) {
  const bool needs_quotes = force_quotes || text.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) {
    out.append(text);
    return;
  }
  out.push_back('"');
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

std::string render_jsonl(const std::vector<CorpusRecord>& records) {
  std::string out;
  for (const auto& record : records) {
    ordered_json object;
    object["id"] = record.id;
    object["article"] = record.article;
    object["gold_summary"] = record.gold_summary;
    object["model_summaries"] = ordered_json::object();
    for (const auto& [name, text] : record.model_summaries) object["model_summaries"][name] = text;
    try {
      out += object.dump();
    } catch (const ordered_json::type_error& e) {
      throw DataError(fmt::format("record '{}' is not valid UTF-8 ({})", record.id, e.what()));
    }
    out.push_back('\n');
  }
  return out;
}

std::string render_csv(const std::vector<CorpusRecord>& records) {
  std::set<std::string> models;
  for (const auto& record : records) {
    for (const auto& [name, text] : record.model_summaries) models.insert(name);
  }
  std::string out = "id,article,gold_summary";
  for (const auto& name : models) {
    out.push_back(',');
    append_csv_cell(out, std::string(kModelColumnPrefix) + name, false);
  }
  out += "\r\n";
  for (const auto& record : records) {
    append_csv_cell(out, record.id, false);
    out.push_back(',');
    append_csv_cell(out, record.article, false);
    out.push_back(',');
    append_csv_cell(out, record.gold_summary, false);
    for (const auto& name : models) {
      out.push_back(',');
      auto it = record.model_summaries.find(name);
      if (it != record.model_summaries.end()) append_csv_cell(out, it->second, it->second.empty());
    }
    out += "\r\n";
  }
  return out;
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "csv") return CorpusFormat::csv;
  throw ConfigError(fmt::format("unknown corpus format '{}' (expected jsonl or csv)", name));
}

CorpusFormat corpus_format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
}

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  const auto content = read_file(path);
  auto records = format == CorpusFormat::jsonl ? load_jsonl(content) : load_csv(content);
  if (records.empty()) throw DataError(fmt::format("corpus '{}' contains no records", path.string()));
  return records;
}

void save_corpus(const std::vector<CorpusRecord>& records, const std::filesystem::path& path,
                 CorpusFormat format) {
  if (records.empty()) throw DataError("refusing to write an empty corpus");
  write_file(path, format == CorpusFormat::jsonl ? render_jsonl(records) : render_csv(records));
}

void validate_records(const std::vector<CorpusRecord>& records) {
  std::set<std::string_view> ids;
  for (const auto& record : records) {
    check_record(record, 0);
    if (!ids.insert(record.id).second) throw DataError(fmt::format("duplicate id '{}'", record.id));
  }
}

SummarySource SummarySource::parse(std::string_view text) {
  if (text == "gold") return gold();
  if (text.starts_with(kModelColumnPrefix) && text.size() > kModelColumnPrefix.size()) {
    return model(std::string(text.substr(kModelColumnPrefix.size())));
  }
  throw ConfigError(fmt::format("summary source must be 'gold' or 'model:<name>', got '{}'", text));
}

CorpusStats corpus_stats(const std::vector<CorpusRecord>& records, const SentenceSplitter& splitter,
                         const SummarySource& source) {
  if (!source.is_gold()) {
    std::vector<std::string> missing;
    for (const auto& record : records) {
      if (!record.model_summaries.contains(source.model_name)) missing.push_back(record.id);
    }
    if (!missing.empty()) {
      throw DataError(fmt::format("model '{}' missing for records: {}", source.model_name,
                                  fmt::join(missing, ", ")));
    }
  }
  CorpusStats stats;
  stats.num_articles = records.size();
  std::size_t article_sentences = 0;
  for (const auto& record : records) {
    article_sentences += splitter.split(record.article).size();
    const auto& summary = source.is_gold() ? record.gold_summary : record.model_summaries.at(source.model_name);
    stats.total_summary_sentences += splitter.split(summary).size();
  }
  if (stats.num_articles > 0) {
    const auto n = static_cast<double>(stats.num_articles);
    stats.avg_sentences_per_article = static_cast<double>(article_sentences) / n;
    stats.avg_sentences_per_summary = static_cast<double>(stats.total_summary_sentences) / n;
  }
  return stats;
}

}  // namespace posbias
