#include "ideaforge/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "ideaforge/error.hpp"
#include "json.hpp"

namespace ideaforge::config {
namespace {

using nlohmann::json;
using Setter = std::function<void(ServiceConfig&, const json&)>;

template <typename T>
Setter set(T ServiceConfig::*field) {
  return [field](ServiceConfig& c, const json& v) { c.*field = v.get<T>(); };
}

std::size_t count(const json& v) {
  if (!v.is_number_unsigned()) throw ValidationError("expected a nonnegative integer");
  return v.get<std::size_t>();
}

std::chrono::milliseconds ms(const json& v) { return std::chrono::milliseconds(v.get<long long>()); }

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"decoding.max_tokens", [](auto& c, const json& v) { c.params.max_tokens = count(v); }},
      {"decoding.temperature", [](auto& c, const json& v) { c.params.temperature = v.get<double>(); }},
      {"decoding.top_k", [](auto& c, const json& v) { c.params.top_k = count(v); }},
      {"decoding.top_p", [](auto& c, const json& v) { c.params.top_p = v.get<double>(); }},
      {"decoding.presence_penalty", [](auto& c, const json& v) { c.params.presence_penalty = v.get<double>(); }},
      {"decoding.frequency_penalty", [](auto& c, const json& v) { c.params.frequency_penalty = v.get<double>(); }},
      {"decoding.stop", [](auto& c, const json& v) { c.params.stop = v.get<std::vector<std::string>>(); }},
      {"decoding.seed", [](auto& c, const json& v) { c.params.seed = count(v); }},
      {"decoding.n", [](auto& c, const json& v) { c.params.n_candidates = count(v); }},
      {"evaluator.novelty_threshold", [](auto& c, const json& v) { c.thresholds.novelty = v.get<double>(); }},
      {"evaluator.min_len", [](auto& c, const json& v) { c.thresholds.min_len = count(v); }},
      {"evaluator.max_len", [](auto& c, const json& v) { c.thresholds.max_len = count(v); }},
      {"evaluator.novelty_weight", [](auto& c, const json& v) { c.thresholds.novelty_weight = v.get<double>(); }},
      {"evaluator.relevance_weight", [](auto& c, const json& v) { c.thresholds.relevance_weight = v.get<double>(); }},
      {"evaluator.ngram", [](auto& c, const json& v) { c.thresholds.ngram = count(v); }},
      {"remote.base_url", [](auto& c, const json& v) { c.remote.base_url = v.get<std::string>(); }},
      {"remote.model", [](auto& c, const json& v) { c.remote.model_name = v.get<std::string>(); }},
      {"remote.credential_env", [](auto& c, const json& v) { c.remote.credential_env = v.get<std::string>(); }},
      {"remote.timeout_ms", [](auto& c, const json& v) { c.remote.timeout = ms(v); }},
      {"remote.max_retries", [](auto& c, const json& v) { c.remote.retry.max_retries = count(v); }},
      {"remote.backoff_ms", [](auto& c, const json& v) { c.remote.retry.base_delay = ms(v); }},
      {"remote.max_in_flight", [](auto& c, const json& v) { c.remote.max_in_flight = count(v); }},
      {"remote.drop_top_k", [](auto& c, const json& v) { c.remote.drop_top_k = v.get<bool>(); }},
      {"service.port", set(&ServiceConfig::port)},
      {"service.data_dir", set(&ServiceConfig::data_dir)},
      {"service.model", set(&ServiceConfig::model)},
      {"service.bank", set(&ServiceConfig::bank)},
      {"service.corpus", set(&ServiceConfig::corpus)},
      {"service.snapshot_interval", set(&ServiceConfig::snapshot_interval)},
  };
  return table;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing `# comment` that is not inside a string literal.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string && c == '\\') {
      ++i;
    } else if (c == '"') {
      in_string = !in_string;
    } else if (c == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

std::optional<backends::BackendDescriptor> ServiceConfig::default_backend() const {
  if (!model.empty()) {
    backends::BackendDescriptor d;
    d.kind = backends::BackendKind::local;
    d.model_path = model;
    return d;
  }
  if (!remote.base_url.empty()) return remote;
  return std::nullopt;
}

ServiceConfig parse_config(std::istream& in, ServiceConfig config) {
  std::string raw;
  std::string section;
  std::size_t n = 0;
  while (std::getline(in, raw)) {
    ++n;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(n, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(n, "expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    const auto it = setters().find(key);
    if (it == setters().end()) throw ParseError(n, "unknown key '" + key + "'");
    try {
      it->second(config, json::parse(trim(std::string_view(line).substr(eq + 1))));
    } catch (const json::exception& e) {
      throw ParseError(n, "bad value for '" + key + "': " + e.what());
    } catch (const ValidationError& e) {
      throw ParseError(n, "bad value for '" + key + "': " + e.what());
    }
  }
  try {
    config.params.validate();
    config.thresholds.validate();
  } catch (const ValidationError& e) {
    throw ParseError(0, e.what());
  }
  return config;
}

ServiceConfig load_config(const std::filesystem::path& path, ServiceConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  return parse_config(in, std::move(base));
}

}  // namespace ideaforge::config
