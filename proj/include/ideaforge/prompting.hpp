#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ideaforge/corpus.hpp"

namespace ideaforge::prompting {

struct ProblemPrompt {
  std::string category;
  std::string problem_statement;

  /// Throws ValidationError when either field is empty.
  void validate() const;

  friend bool operator==(const ProblemPrompt&, const ProblemPrompt&) = default;
};

struct AnalogyExample {
  std::string source_domain;
  std::string target_domain;
  std::string description;
  std::optional<std::string> provenance;

  void validate() const;

  friend bool operator==(const AnalogyExample&, const AnalogyExample&) = default;
};

struct AnalogyPrompt {
  std::vector<AnalogyExample> examples;
  std::string query_source;
  std::string query_target;
  /// When set, examples are shuffled with this seed before rendering.
  std::optional<std::uint64_t> shuffle_seed;

  void validate() const;

  friend bool operator==(const AnalogyPrompt&, const AnalogyPrompt&) = default;
};

/// Rendering of the "Applying {source} to {target}" scaffold.
struct ScaffoldStyle {
  std::string terminator = ":";
  std::string example_separator = "\n\n";
};

/// Default stop string for analogy generation: the start of the next scaffold.
inline constexpr std::string_view kAnalogyStop = "\nApplying ";

/// `{start}{category}{separator}{problem_statement}` with no end marker, so a
/// model trained on the same framing continues with a solution.
std::string build_problem_prompt(const ProblemPrompt& prompt, const corpus::Delimiters& delims = {});

/// `Applying {source} to {target}:\n{description}` per example, joined by one
/// blank line, followed by the query scaffold with nothing after it. Domain
/// names are lowercased inside scaffolds.
std::string build_analogy_prompt(const AnalogyPrompt& prompt, const ScaffoldStyle& style = {});

/// The scaffold line for one domain pair, without the trailing newline.
std::string scaffold_line(std::string_view source, std::string_view target, const ScaffoldStyle& style = {});

/// Categories not in `known` produce a warning string; empty when fine.
std::optional<std::string> category_warning(const ProblemPrompt& prompt, const std::set<std::string>& known);

/// JSONL with fields source_domain, target_domain, description, provenance.
/// Throws ParseError with the line number on bad input.
std::vector<AnalogyExample> load_example_bank(std::istream& in);
std::vector<AnalogyExample> load_example_bank(const std::filesystem::path& path);

std::string serialize_example(const AnalogyExample& example);
std::string save_example_bank(std::span<const AnalogyExample> examples);

}  // namespace ideaforge::prompting
