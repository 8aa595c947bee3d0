#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ideaforge::corpus {

enum class RecordKind { product, design_concept };

std::string_view to_string(RecordKind kind);
std::optional<RecordKind> parse_kind(std::string_view s);

/// One award-style design entry. Original casing is preserved here; only
/// model-side text is case folded.
struct DesignRecord {
  std::string id;
  std::string category;
  std::optional<std::string> title;
  std::string description;
  std::optional<int> year;
  RecordKind kind = RecordKind::product;
  std::optional<std::string> source_url;

  friend bool operator==(const DesignRecord&, const DesignRecord&) = default;
};

/// Framing used when a record becomes training text. Prompts reuse the same
/// framing so the model sees the category before the problem statement.
struct Delimiters {
  std::string start = "<|startoftext|>";
  std::string separator = "\n";
  std::string end = "<|endoftext|>";

  /// `{category}\n{description}` framing with no start/end markers.
  static Delimiters none() { return {"", "\n", ""}; }
};

/// `problem + separator + solution` always equals the original description.
struct ProblemSolutionSplit {
  std::optional<std::string> problem;
  std::string separator;
  std::string solution;
};

struct CorpusStats {
  std::size_t records = 0;
  std::map<std::string, std::size_t> by_kind;  // always has "product" and "concept"
  std::map<int, std::size_t> by_year;
  std::size_t without_year = 0;
  std::map<std::string, std::size_t> by_category;
  std::size_t token_count = 0;  // description tokens
  double mean_description_tokens = 0.0;
};

/// Parses UTF-8 JSONL. Blank lines are skipped. Throws ParseError carrying
/// the 1-based line number for malformed JSON, missing or mistyped fields,
/// unknown fields and duplicate ids.
std::vector<DesignRecord> parse_corpus(std::istream& in);
std::vector<DesignRecord> parse_corpus_file(const std::filesystem::path& path);

/// One JSONL line (no trailing newline), fields in canonical order, absent
/// optionals omitted.
std::string serialize_record(const DesignRecord& record);

/// `{start}{category}{separator}{description}{end}`.
std::string format_training_text(const DesignRecord& record, const Delimiters& delims = {});

/// All records formatted and separated by one blank line.
std::string format_training_file(std::span<const DesignRecord> records, const Delimiters& delims = {});

/// Splits a training-text file back into its formatted blocks. With start/end
/// markers the markers are authoritative; otherwise blocks are separated by
/// blank lines.
std::vector<std::string> split_training_blocks(std::string_view text, const Delimiters& delims = {});

/// Removes a leading start marker and a trailing end marker, if present.
std::string_view strip_delimiters(std::string_view block, const Delimiters& delims);

/// True when some word of `sentence` begins with a problem-cue stem
/// (concern, problem, difficult, challeng, stress, time-consum, risk, avoid,
/// lack, issue, however).
bool has_problem_cue(std::string_view sentence);

/// The first sentence ends at `.`, `?` or `!` followed by whitespace. It is
/// reported as the problem only when it carries a problem cue.
ProblemSolutionSplit split_problem_solution(std::string_view description);

CorpusStats corpus_stats(std::span<const DesignRecord> records);

}  // namespace ideaforge::corpus
