#include "ideaforge/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <set>

#include "ideaforge/error.hpp"
#include "ideaforge/textkit.hpp"
#include "json.hpp"

namespace ideaforge::corpus {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 7> kFields = {"id", "category", "title", "description",
                                                     "year", "kind", "source_url"};

constexpr std::array<std::string_view, 11> kCueStems = {"concern", "problem", "difficult", "challeng",
                                                        "stress",  "time-consum", "risk", "avoid",
                                                        "lack",    "issue",       "however"};

bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string required_string(const nlohmann::json& obj, std::string_view field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) throw ParseError(line, "missing required field '" + std::string(field) + "'");
  if (!it->is_string()) throw ParseError(line, "field '" + std::string(field) + "' must be a string");
  auto value = it->get<std::string>();
  if (value.empty()) throw ParseError(line, "field '" + std::string(field) + "' must be nonempty");
  return value;
}

std::optional<std::string> optional_string(const nlohmann::json& obj, std::string_view field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(line, "field '" + std::string(field) + "' must be a string");
  return it->get<std::string>();
}

DesignRecord parse_record(std::string_view text, std::size_t line) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line, std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(line, "expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(kFields.begin(), kFields.end(), key) == kFields.end()) {
      throw ParseError(line, "unknown field '" + key + "'");
    }
  }

  DesignRecord r;
  r.id = required_string(obj, "id", line);
  r.category = required_string(obj, "category", line);
  r.title = optional_string(obj, "title", line);
  r.description = required_string(obj, "description", line);
  if (auto it = obj.find("year"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ParseError(line, "field 'year' must be an integer");
    r.year = it->get<int>();
  }
  const auto kind = required_string(obj, "kind", line);
  auto parsed = parse_kind(kind);
  if (!parsed) throw ParseError(line, "field 'kind' must be \"product\" or \"concept\", got \"" + kind + "\"");
  r.kind = *parsed;
  r.source_url = optional_string(obj, "source_url", line);
  return r;
}

}  // namespace

std::string_view to_string(RecordKind kind) { return kind == RecordKind::product ? "product" : "concept"; }

std::optional<RecordKind> parse_kind(std::string_view s) {
  if (s == "product") return RecordKind::product;
  if (s == "concept") return RecordKind::design_concept;
  return std::nullopt;
}

std::vector<DesignRecord> parse_corpus(std::istream& in) {
  std::vector<DesignRecord> records;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::all_of(line.begin(), line.end(), is_ascii_space)) continue;
    auto record = parse_record(line, lineno);
    auto [it, inserted] = seen.emplace(record.id, lineno);
    if (!inserted) {
      throw ParseError(lineno, "duplicate id \"" + record.id + "\" (first seen on line " + std::to_string(it->second) + ")");
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<DesignRecord> parse_corpus_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return parse_corpus(in);
}

std::string serialize_record(const DesignRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["category"] = r.category;
  if (r.title) j["title"] = *r.title;
  j["description"] = r.description;
  if (r.year) j["year"] = *r.year;
  j["kind"] = to_string(r.kind);
  if (r.source_url) j["source_url"] = *r.source_url;
  return j.dump();
}

std::string format_training_text(const DesignRecord& record, const Delimiters& delims) {
  std::string out;
  out.reserve(delims.start.size() + record.category.size() + delims.separator.size() + record.description.size() +
              delims.end.size());
  out += delims.start;
  out += record.category;
  out += delims.separator;
  out += record.description;
  out += delims.end;
  return out;
}

std::string format_training_file(std::span<const DesignRecord> records, const Delimiters& delims) {
  std::string out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += format_training_text(records[i], delims);
  }
  if (!records.empty()) out += '\n';
  return out;
}

std::vector<std::string> split_training_blocks(std::string_view text, const Delimiters& delims) {
  std::vector<std::string> blocks;
  if (!delims.start.empty() && !delims.end.empty()) {
    std::size_t pos = 0;
    while ((pos = text.find(delims.start, pos)) != std::string_view::npos) {
      const auto end = text.find(delims.end, pos + delims.start.size());
      if (end == std::string_view::npos) throw ParseError(0, "unterminated training block at byte " + std::to_string(pos));
      blocks.emplace_back(text.substr(pos, end + delims.end.size() - pos));
      pos = end + delims.end.size();
    }
    return blocks;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find("\n\n", start);
    auto chunk = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    while (!chunk.empty() && (chunk.back() == '\n' || chunk.back() == '\r')) chunk.remove_suffix(1);
    while (!chunk.empty() && chunk.front() == '\n') chunk.remove_prefix(1);
    if (!chunk.empty()) blocks.emplace_back(chunk);
    if (end == std::string_view::npos) break;
    start = end + 2;
  }
  return blocks;
}

std::string_view strip_delimiters(std::string_view block, const Delimiters& delims) {
  if (!delims.start.empty() && block.starts_with(delims.start)) block.remove_prefix(delims.start.size());
  if (!delims.end.empty() && block.ends_with(delims.end)) block.remove_suffix(delims.end.size());
  return block;
}

bool has_problem_cue(std::string_view sentence) {
  const std::string folded = textkit::fold_case(sentence);
  std::size_t i = 0;
  while (i < folded.size()) {
    // Words are runs of letters, digits, hyphens and non-ASCII bytes.
    auto is_word_byte = [](char c) {
      const auto u = static_cast<unsigned char>(c);
      return u >= 0x80 || std::isalnum(u) || c == '-';
    };
    while (i < folded.size() && !is_word_byte(folded[i])) ++i;
    const std::size_t start = i;
    while (i < folded.size() && is_word_byte(folded[i])) ++i;
    const std::string_view word(folded.data() + start, i - start);
    for (auto stem : kCueStems) {
      if (word.starts_with(stem)) return true;
    }
  }
  return false;
}

ProblemSolutionSplit split_problem_solution(std::string_view description) {
  std::size_t cut = description.size();
  std::size_t rest = description.size();
  for (std::size_t i = 0; i + 1 < description.size(); ++i) {
    const char c = description[i];
    if ((c == '.' || c == '?' || c == '!') && is_ascii_space(description[i + 1])) {
      cut = i + 1;
      rest = cut;
      while (rest < description.size() && is_ascii_space(description[rest])) ++rest;
      break;
    }
  }
  const auto first = description.substr(0, cut);
  ProblemSolutionSplit split;
  if (!has_problem_cue(first)) {
    split.solution = std::string(description);
    return split;
  }
  split.problem = std::string(first);
  split.separator = std::string(description.substr(cut, rest - cut));
  split.solution = std::string(description.substr(rest));
  return split;
}

CorpusStats corpus_stats(std::span<const DesignRecord> records) {
  CorpusStats s;
  s.by_kind["product"] = 0;
  s.by_kind["concept"] = 0;
  for (const auto& r : records) {
    ++s.records;
    ++s.by_kind[std::string(to_string(r.kind))];
    if (r.year) {
      ++s.by_year[*r.year];
    } else {
      ++s.without_year;
    }
    ++s.by_category[r.category];
    s.token_count += textkit::tokenize(r.description).size();
  }
  if (s.records > 0) s.mean_description_tokens = static_cast<double>(s.token_count) / static_cast<double>(s.records);
  return s;
}

}  // namespace ideaforge::corpus
