#include "ideaforge/json_io.hpp"

#include <algorithm>
#include <initializer_list>
#include <type_traits>

namespace ideaforge {
namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
  if (!j.is_object()) throw ValidationError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError("unknown " + std::string(what) + " field '" + key + "'");
    }
  }
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_unsigned()) throw ValidationError(std::string("field '") + key + "' must be a nonnegative integer");
    }
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError(std::string("field '") + key + "' has the wrong type");
    }
  }
}

template <typename T>
void read_optional(const nlohmann::json& j, const char* key, std::optional<T>& out) {
  out.reset();
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    T v{};
    read_if(j, key, v);
    out = std::move(v);
  }
}

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw ValidationError(std::string("missing field '") + key + "'");
  T v{};
  read_if(j, key, v);
  return v;
}

}  // namespace

namespace decoding {

void to_json(nlohmann::json& j, const DecodingParams& p) {
  j = nlohmann::json{{"max_tokens", p.max_tokens},
                     {"temperature", p.temperature},
                     {"top_k", p.top_k},
                     {"top_p", p.top_p},
                     {"presence_penalty", p.presence_penalty},
                     {"frequency_penalty", p.frequency_penalty},
                     {"stop", p.stop},
                     {"seed", p.seed},
                     {"n_candidates", p.n_candidates}};
}

void from_json(const nlohmann::json& j, DecodingParams& p) {
  check_keys(j,
             {"max_tokens", "temperature", "top_k", "top_p", "presence_penalty", "frequency_penalty", "stop", "seed",
              "n_candidates"},
             "params");
  read_if(j, "max_tokens", p.max_tokens);
  read_if(j, "temperature", p.temperature);
  read_if(j, "top_k", p.top_k);
  read_if(j, "top_p", p.top_p);
  read_if(j, "presence_penalty", p.presence_penalty);
  read_if(j, "frequency_penalty", p.frequency_penalty);
  read_if(j, "stop", p.stop);
  read_if(j, "seed", p.seed);
  read_if(j, "n_candidates", p.n_candidates);
}

void to_json(nlohmann::json& j, const GenerationResult& r) {
  j = nlohmann::json{{"text", r.text},
                     {"token_ids", r.token_ids},
                     {"finish_reason", to_string(r.finish_reason)},
                     {"logprobs", r.logprobs},
                     {"params", r.params}};
  if (r.matched_stop) j["matched_stop"] = *r.matched_stop;
  if (r.raw_response) j["raw_response"] = *r.raw_response;
}

void from_json(const nlohmann::json& j, GenerationResult& r) {
  check_keys(j, {"text", "token_ids", "finish_reason", "logprobs", "params", "matched_stop", "raw_response"},
             "generation");
  r = GenerationResult{};
  r.text = required<std::string>(j, "text");
  read_if(j, "token_ids", r.token_ids);
  auto fr = parse_finish_reason(required<std::string>(j, "finish_reason"));
  if (!fr) throw ValidationError("unknown finish_reason");
  r.finish_reason = *fr;
  read_if(j, "logprobs", r.logprobs);
  read_if(j, "params", r.params);
  read_optional(j, "matched_stop", r.matched_stop);
  read_optional(j, "raw_response", r.raw_response);
}

}  // namespace decoding

namespace backends {

void to_json(nlohmann::json& j, const BackendDescriptor& d) {
  j = nlohmann::json{{"kind", to_string(d.kind)}};
  if (d.kind == BackendKind::local) {
    j["model_path"] = d.model_path;
    return;
  }
  j["base_url"] = d.base_url;
  j["model_name"] = d.model_name;
  j["credential_env"] = d.credential_env;
  j["credential"] = kRedacted;
  j["timeout_ms"] = d.timeout.count();
  j["retry"] = {{"max_retries", d.retry.max_retries},
                {"base_delay_ms", d.retry.base_delay.count()},
                {"max_delay_ms", d.retry.max_delay.count()}};
  j["max_in_flight"] = d.max_in_flight;
  j["drop_top_k"] = d.drop_top_k;
}

void from_json(const nlohmann::json& j, BackendDescriptor& d) {
  check_keys(j,
             {"kind", "model_path", "base_url", "model_name", "credential_env", "credential", "timeout_ms", "retry",
              "max_in_flight", "drop_top_k"},
             "backend");
  if (j.contains("kind")) {
    auto kind = parse_backend_kind(j.at("kind").get<std::string>());
    if (!kind) throw ValidationError("backend kind must be \"local\" or \"remote\"");
    d.kind = *kind;
  }
  read_if(j, "model_path", d.model_path);
  read_if(j, "base_url", d.base_url);
  read_if(j, "model_name", d.model_name);
  read_if(j, "credential_env", d.credential_env);
  if (j.contains("timeout_ms")) d.timeout = std::chrono::milliseconds(required<long long>(j, "timeout_ms"));
  if (auto it = j.find("retry"); it != j.end()) {
    check_keys(*it, {"max_retries", "base_delay_ms", "max_delay_ms"}, "retry");
    read_if(*it, "max_retries", d.retry.max_retries);
    if (it->contains("base_delay_ms")) d.retry.base_delay = std::chrono::milliseconds(required<long long>(*it, "base_delay_ms"));
    if (it->contains("max_delay_ms")) d.retry.max_delay = std::chrono::milliseconds(required<long long>(*it, "max_delay_ms"));
  }
  read_if(j, "max_in_flight", d.max_in_flight);
  read_if(j, "drop_top_k", d.drop_top_k);
}

}  // namespace backends

namespace prompting {

void to_json(nlohmann::json& j, const ProblemPrompt& p) {
  j = nlohmann::json{{"category", p.category}, {"problem_statement", p.problem_statement}};
}

void from_json(const nlohmann::json& j, ProblemPrompt& p) {
  check_keys(j, {"category", "problem_statement"}, "problem input");
  p.category = required<std::string>(j, "category");
  p.problem_statement = required<std::string>(j, "problem_statement");
}

void to_json(nlohmann::json& j, const AnalogyExample& e) {
  j = nlohmann::json{{"source_domain", e.source_domain}, {"target_domain", e.target_domain}, {"description", e.description}};
  if (e.provenance) j["provenance"] = *e.provenance;
}

void from_json(const nlohmann::json& j, AnalogyExample& e) {
  check_keys(j, {"source_domain", "target_domain", "description", "provenance"}, "analogy example");
  e.source_domain = required<std::string>(j, "source_domain");
  e.target_domain = required<std::string>(j, "target_domain");
  e.description = required<std::string>(j, "description");
  read_optional(j, "provenance", e.provenance);
}

void to_json(nlohmann::json& j, const AnalogyPrompt& p) {
  j = nlohmann::json{{"examples", p.examples}, {"query_source", p.query_source}, {"query_target", p.query_target}};
  if (p.shuffle_seed) j["shuffle_seed"] = *p.shuffle_seed;
}

void from_json(const nlohmann::json& j, AnalogyPrompt& p) {
  check_keys(j, {"examples", "query_source", "query_target", "shuffle_seed"}, "analogy input");
  p.examples.clear();
  read_if(j, "examples", p.examples);
  p.query_source = required<std::string>(j, "query_source");
  p.query_target = required<std::string>(j, "query_target");
  read_optional(j, "shuffle_seed", p.shuffle_seed);
}

}  // namespace prompting

namespace eval {

void to_json(nlohmann::json& j, const Thresholds& t) {
  j = nlohmann::json{{"novelty", t.novelty},
                     {"min_len", t.min_len},
                     {"max_len", t.max_len},
                     {"novelty_weight", t.novelty_weight},
                     {"relevance_weight", t.relevance_weight},
                     {"ngram", t.ngram}};
}

void from_json(const nlohmann::json& j, Thresholds& t) {
  check_keys(j, {"novelty", "min_len", "max_len", "novelty_weight", "relevance_weight", "ngram"}, "thresholds");
  read_if(j, "novelty", t.novelty);
  read_if(j, "min_len", t.min_len);
  read_if(j, "max_len", t.max_len);
  read_if(j, "novelty_weight", t.novelty_weight);
  read_if(j, "relevance_weight", t.relevance_weight);
  read_if(j, "ngram", t.ngram);
}

void to_json(nlohmann::json& j, const EvaluationReport& r) {
  j = nlohmann::json{{"novelty", r.novelty},
                     {"relevance", r.relevance},
                     {"repetition_flag", r.repetition_flag},
                     {"length_ok", r.length_ok},
                     {"novelty_ok", r.novelty_ok},
                     {"composite", r.composite},
                     {"token_count", r.token_count}};
}

void from_json(const nlohmann::json& j, EvaluationReport& r) {
  check_keys(j, {"novelty", "relevance", "repetition_flag", "length_ok", "novelty_ok", "composite", "token_count"},
             "scores");
  r.novelty = required<double>(j, "novelty");
  r.relevance = required<double>(j, "relevance");
  r.repetition_flag = required<bool>(j, "repetition_flag");
  r.length_ok = required<bool>(j, "length_ok");
  r.novelty_ok = required<bool>(j, "novelty_ok");
  r.composite = required<double>(j, "composite");
  r.token_count = required<std::size_t>(j, "token_count");
}

void to_json(nlohmann::json& j, const CandidateInputs& in) {
  j = nlohmann::json::object();
  if (in.category) j["category"] = *in.category;
  if (in.problem_statement) j["problem_statement"] = *in.problem_statement;
  if (in.source_domain) j["source_domain"] = *in.source_domain;
  if (in.target_domain) j["target_domain"] = *in.target_domain;
}

void from_json(const nlohmann::json& j, CandidateInputs& in) {
  check_keys(j, {"category", "problem_statement", "source_domain", "target_domain"}, "candidate inputs");
  read_optional(j, "category", in.category);
  read_optional(j, "problem_statement", in.problem_statement);
  read_optional(j, "source_domain", in.source_domain);
  read_optional(j, "target_domain", in.target_domain);
}

void to_json(nlohmann::json& j, const ConceptCandidate& c) {
  j = nlohmann::json{{"id", c.id},
                     {"text", c.text},
                     {"mode", to_string(c.mode)},
                     {"inputs", c.inputs},
                     {"params", c.params},
                     {"backend", c.backend},
                     {"verdict", to_string(c.verdict)}};
  if (c.generation) j["generation"] = *c.generation;
  if (c.scores) j["scores"] = *c.scores;
}

void from_json(const nlohmann::json& j, ConceptCandidate& c) {
  check_keys(j, {"id", "text", "mode", "inputs", "params", "backend", "verdict", "generation", "scores"}, "candidate");
  c = ConceptCandidate{};
  c.id = required<std::string>(j, "id");
  c.text = required<std::string>(j, "text");
  if (j.contains("mode")) {
    auto m = parse_mode(j.at("mode").get<std::string>());
    if (!m) throw ValidationError("unknown candidate mode");
    c.mode = *m;
  }
  read_if(j, "inputs", c.inputs);
  read_if(j, "params", c.params);
  read_if(j, "backend", c.backend);
  if (j.contains("verdict")) {
    auto v = parse_verdict(j.at("verdict").get<std::string>());
    if (!v) throw ValidationError("unknown verdict");
    c.verdict = *v;
  }
  read_optional(j, "generation", c.generation);
  read_optional(j, "scores", c.scores);
}

}  // namespace eval

namespace corpus {

void to_json(nlohmann::json& j, const CorpusStats& s) {
  nlohmann::json years = nlohmann::json::object();
  for (const auto& [y, n] : s.by_year) years[std::to_string(y)] = n;
  j = nlohmann::json{{"records", s.records},
                     {"by_kind", s.by_kind},
                     {"by_year", years},
                     {"without_year", s.without_year},
                     {"by_category", s.by_category},
                     {"token_count", s.token_count},
                     {"mean_description_tokens", s.mean_description_tokens}};
}

}  // namespace corpus
}  // namespace ideaforge
