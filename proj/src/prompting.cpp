#include "ideaforge/prompting.hpp"

#include <algorithm>
#include <fstream>
#include <istream>

#include "ideaforge/decoder.hpp"
#include "ideaforge/error.hpp"
#include "ideaforge/textkit.hpp"
#include "json.hpp"

namespace ideaforge::prompting {
namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; });
}

std::string string_field(const nlohmann::json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) throw ParseError(line, std::string("missing required field '") + field + "'");
  if (!it->is_string()) throw ParseError(line, std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

void ProblemPrompt::validate() const {
  if (blank(category)) throw ValidationError("problem prompt needs a category");
  if (blank(problem_statement)) throw ValidationError("problem prompt needs a problem statement");
}

void AnalogyExample::validate() const {
  if (blank(source_domain)) throw ValidationError("analogy example needs a source_domain");
  if (blank(target_domain)) throw ValidationError("analogy example needs a target_domain");
  if (blank(description)) throw ValidationError("analogy example needs a description");
}

void AnalogyPrompt::validate() const {
  if (examples.empty()) throw ValidationError("analogy prompt needs at least one example");
  for (const auto& e : examples) e.validate();
  if (blank(query_source)) throw ValidationError("analogy prompt needs a query source domain");
  if (blank(query_target)) throw ValidationError("analogy prompt needs a query target domain");
}

std::string build_problem_prompt(const ProblemPrompt& prompt, const corpus::Delimiters& delims) {
  prompt.validate();
  return delims.start + prompt.category + delims.separator + prompt.problem_statement;
}

std::string scaffold_line(std::string_view source, std::string_view target, const ScaffoldStyle& style) {
  return "Applying " + textkit::fold_case(source) + " to " + textkit::fold_case(target) + style.terminator;
}

std::string build_analogy_prompt(const AnalogyPrompt& prompt, const ScaffoldStyle& style) {
  prompt.validate();
  std::vector<const AnalogyExample*> order;
  for (const auto& e : prompt.examples) order.push_back(&e);
  if (prompt.shuffle_seed) {
    // Fisher-Yates with the portable generator so a seed means the same order everywhere.
    decoding::Rng rng(*prompt.shuffle_seed);
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }
  }
  std::string out;
  for (const auto* e : order) {
    out += scaffold_line(e->source_domain, e->target_domain, style);
    out += '\n';
    out += e->description;
    out += style.example_separator;
  }
  out += scaffold_line(prompt.query_source, prompt.query_target, style);
  out += '\n';
  return out;
}

std::optional<std::string> category_warning(const ProblemPrompt& prompt, const std::set<std::string>& known) {
  if (known.empty() || known.contains(prompt.category)) return std::nullopt;
  return "category \"" + prompt.category + "\" does not appear in the corpus";
}

std::vector<AnalogyExample> load_example_bank(std::istream& in) {
  std::vector<AnalogyExample> bank;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(lineno, "expected a JSON object");
    for (const auto& [key, value] : obj.items()) {
      if (key != "source_domain" && key != "target_domain" && key != "description" && key != "provenance") {
        throw ParseError(lineno, "unknown field '" + key + "'");
      }
    }
    AnalogyExample e;
    e.source_domain = string_field(obj, "source_domain", lineno);
    e.target_domain = string_field(obj, "target_domain", lineno);
    e.description = string_field(obj, "description", lineno);
    if (auto it = obj.find("provenance"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw ParseError(lineno, "field 'provenance' must be a string");
      e.provenance = it->get<std::string>();
    }
    try {
      e.validate();
    } catch (const ValidationError& err) {
      throw ParseError(lineno, err.what());
    }
    bank.push_back(std::move(e));
  }
  return bank;
}

std::vector<AnalogyExample> load_example_bank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open example bank " + path.string());
  return load_example_bank(in);
}

std::string serialize_example(const AnalogyExample& e) {
  nlohmann::ordered_json j;
  j["source_domain"] = e.source_domain;
  j["target_domain"] = e.target_domain;
  j["description"] = e.description;
  if (e.provenance) j["provenance"] = *e.provenance;
  return j.dump();
}

std::string save_example_bank(std::span<const AnalogyExample> examples) {
  std::string out;
  for (const auto& e : examples) {
    out += serialize_example(e);
    out += '\n';
  }
  return out;
}

}  // namespace ideaforge::prompting
