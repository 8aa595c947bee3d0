#include "ideaforge/backends.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <thread>

#include "httplib.h"
#include "ideaforge/reference_lm.hpp"

namespace ideaforge::backends {
namespace {

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path_prefix;
};

ParsedUrl parse_base_url(const std::string& base) {
  static const std::regex re(R"(^(https?://[^/?#]+)(/[^?#]*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(base, m, re)) throw BackendError(BackendErrorKind::config, "invalid remote base URL '" + base + "'");
  std::string prefix = m[2].matched ? m[2].str() : std::string();
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix};
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string_view to_string(BackendKind k) { return k == BackendKind::local ? "local" : "remote"; }

std::optional<BackendKind> parse_backend_kind(std::string_view s) {
  if (s == "local") return BackendKind::local;
  if (s == "remote") return BackendKind::remote;
  return std::nullopt;
}

std::string_view to_string(BackendErrorKind k) {
  switch (k) {
    case BackendErrorKind::config: return "config";
    case BackendErrorKind::model_load: return "model_load";
    case BackendErrorKind::timeout: return "timeout";
    case BackendErrorKind::transport: return "transport";
    case BackendErrorKind::http_status: return "http_status";
    case BackendErrorKind::malformed_response: return "malformed_response";
  }
  return "unknown";
}

void BackendDescriptor::validate() const {
  if (timeout.count() <= 0) throw ValidationError("backend timeout must be > 0");
  if (max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
  if (kind == BackendKind::remote) {
    if (base_url.empty()) throw ValidationError("remote backend requires a base URL");
    if (credential_env.empty()) throw ValidationError("remote backend requires a credential reference");
    if (model_name.empty()) throw ValidationError("remote backend requires a model name");
    try {
      parse_base_url(base_url);
    } catch (const BackendError& e) {
      throw ValidationError(e.what());
    }
  } else if (model_path.empty()) {
    throw ValidationError("local backend requires a model path");
  }
}

LocalBackend::LocalBackend(std::shared_ptr<const lm::NGramModel> model, BackendDescriptor descriptor,
                           corpus::Delimiters delims)
    : model_(std::move(model)), descriptor_(std::move(descriptor)), delims_(std::move(delims)) {
  if (!model_) throw BackendError(BackendErrorKind::model_load, "local backend has no model");
  descriptor_.kind = BackendKind::local;
}

std::unique_ptr<LocalBackend> LocalBackend::open(const BackendDescriptor& descriptor, corpus::Delimiters delims) {
  std::shared_ptr<const lm::NGramModel> model;
  try {
    model = std::make_shared<const lm::NGramModel>(lm::load(descriptor.model_path).model);
  } catch (const std::exception& e) {
    throw BackendError(BackendErrorKind::model_load, std::string("cannot load local model: ") + e.what());
  }
  return std::make_unique<LocalBackend>(std::move(model), descriptor, std::move(delims));
}

std::vector<textkit::TokenId> LocalBackend::encode_prompt(std::string_view prompt) const {
  if (!delims_.start.empty() && prompt.starts_with(delims_.start)) prompt.remove_prefix(delims_.start.size());
  const auto tokens = textkit::tokenize(prompt);
  std::vector<textkit::TokenId> ids{textkit::kBosId};
  const auto body = textkit::encode(model_->vocab(), tokens);
  ids.insert(ids.end(), body.begin(), body.end());
  return ids;
}

std::vector<decoding::GenerationResult> LocalBackend::complete(const CompletionRequest& request) {
  request.params.validate();
  const auto prompt = encode_prompt(request.prompt);
  std::vector<decoding::GenerationResult> results;
  results.reserve(request.params.n_candidates);
  for (std::size_t i = 0; i < request.params.n_candidates; ++i) {
    auto params = request.params;
    params.seed = request.params.seed + i;
    results.push_back(decoding::generate(*model_, prompt, params, model_->vocab()));
  }
  return results;
}

WireParams map_params_remote(const decoding::DecodingParams& params, bool drop_top_k) {
  WireParams out;
  if (params.top_k > 0) {
    if (!drop_top_k) {
      throw ValidationError("top_k=" + std::to_string(params.top_k) +
                            " is not supported by remote completion endpoints; unset it or enable drop_top_k");
    }
    out.warnings.push_back("top_k=" + std::to_string(params.top_k) + " dropped: remote endpoints do not support it");
  }
  auto& f = out.fields;
  f["max_tokens"] = params.max_tokens;
  f["temperature"] = params.temperature;
  f["top_p"] = params.top_p;
  f["presence_penalty"] = params.presence_penalty;
  f["frequency_penalty"] = params.frequency_penalty;
  if (!params.stop.empty()) f["stop"] = params.stop;
  f["n"] = params.n_candidates;
  return out;
}

nlohmann::ordered_json build_request_body(const CompletionRequest& request, std::string_view model_name,
                                          bool drop_top_k, std::vector<std::string>* warnings) {
  auto mapped = map_params_remote(request.params, drop_top_k);
  nlohmann::ordered_json body;
  body["model"] = model_name;
  body["prompt"] = request.prompt;
  for (auto& [k, v] : mapped.fields.items()) body[k] = v;
  if (warnings) *warnings = std::move(mapped.warnings);
  return body;
}

std::vector<decoding::GenerationResult> parse_completion_response(std::string_view body,
                                                                  const decoding::DecodingParams& params) {
  auto malformed = [](const std::string& why) {
    return BackendError(BackendErrorKind::malformed_response, "malformed completion response: " + why);
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw malformed(e.what());
  }
  if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array()) throw malformed("missing 'choices' array");

  struct Choice {
    std::size_t index;
    decoding::GenerationResult result;
  };
  std::vector<Choice> choices;
  std::size_t position = 0;
  for (const auto& c : j["choices"]) {
    if (!c.is_object() || !c.contains("text") || !c["text"].is_string()) throw malformed("choice without string 'text'");
    decoding::GenerationResult r;
    r.text = c["text"].get<std::string>();
    r.params = params;
    r.raw_response = std::string(body);

    const auto fr = c.value("finish_reason", nlohmann::json());
    if (fr.is_string() && fr.get<std::string>() != "length") {
      r.finish_reason = decoding::FinishReason::stop;
    } else if (fr.is_null() || fr.is_string()) {
      r.finish_reason = decoding::FinishReason::length;
    } else {
      throw malformed("'finish_reason' must be a string");
    }

    // Endpoints normally strip the stop string; enforce it regardless.
    std::size_t first = std::string::npos;
    for (const auto& s : params.stop) {
      const auto pos = r.text.find(s);
      if (pos < first) {
        first = pos;
        r.matched_stop = s;
      }
    }
    if (first != std::string::npos) {
      r.text.resize(first);
      r.finish_reason = decoding::FinishReason::stop;
    } else if (r.finish_reason == decoding::FinishReason::stop) {
      r.matched_stop = std::string(kEndpointStop);
    }

    std::size_t index = position;
    if (auto it = c.find("index"); it != c.end() && it->is_number_unsigned()) index = it->get<std::size_t>();
    choices.push_back({index, std::move(r)});
    ++position;
  }
  if (choices.size() != params.n_candidates) {
    throw malformed("expected " + std::to_string(params.n_candidates) + " choices, got " + std::to_string(choices.size()));
  }
  std::stable_sort(choices.begin(), choices.end(), [](const Choice& a, const Choice& b) { return a.index < b.index; });
  std::vector<decoding::GenerationResult> out;
  for (auto& c : choices) out.push_back(std::move(c.result));
  return out;
}

RemoteBackend::RemoteBackend(BackendDescriptor descriptor, LogSink log, Sleeper sleeper)
    : descriptor_(std::move(descriptor)), log_(std::move(log)), sleeper_(std::move(sleeper)) {
  descriptor_.kind = BackendKind::remote;
  descriptor_.validate();
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  in_flight_ = std::make_unique<std::counting_semaphore<>>(static_cast<std::ptrdiff_t>(descriptor_.max_in_flight));
}

RemoteBackend::~RemoteBackend() = default;

std::vector<decoding::GenerationResult> RemoteBackend::complete(const CompletionRequest& request) {
  request.params.validate();
  std::vector<std::string> warnings;
  const auto body = build_request_body(request, descriptor_.model_name, descriptor_.drop_top_k, &warnings).dump();
  for (const auto& w : warnings) {
    if (log_) log_("warning: " + w);
  }

  const char* key = std::getenv(descriptor_.credential_env.c_str());
  if (!key || !*key) {
    throw BackendError(BackendErrorKind::config, "credential variable " + descriptor_.credential_env + " is not set");
  }
  const auto url = parse_base_url(descriptor_.base_url);
  const std::string path = url.path_prefix + "/v1/completions";

  SlotGuard slot(*in_flight_);
  httplib::Client client(url.scheme_host_port);
  if (!client.is_valid()) throw BackendError(BackendErrorKind::config, "unsupported remote URL " + url.scheme_host_port);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(descriptor_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(descriptor_.timeout - secs);
  client.set_connection_timeout(static_cast<time_t>(secs.count()), static_cast<time_t>(usecs.count()));
  client.set_read_timeout(static_cast<time_t>(secs.count()), static_cast<time_t>(usecs.count()));
  client.set_write_timeout(static_cast<time_t>(secs.count()), static_cast<time_t>(usecs.count()));
  const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

  decoding::Rng jitter(request.params.seed ^ 0x9E3779B97F4A7C15ULL);
  const std::size_t max_attempts = 1 + descriptor_.retry.max_retries;
  auto backoff = [&](std::size_t attempt) {
    const double cap = std::min<double>(static_cast<double>(descriptor_.retry.max_delay.count()),
                                        static_cast<double>(descriptor_.retry.base_delay.count()) *
                                            static_cast<double>(1ULL << std::min<std::size_t>(attempt, 30)));
    sleeper_(std::chrono::milliseconds(static_cast<long long>(jitter.uniform() * cap)));
  };

  for (std::size_t attempt = 0;; ++attempt) {
    auto res = client.Post(path, headers, body, "application/json");
    const std::string tag = "POST " + url.scheme_host_port + path + " attempt " + std::to_string(attempt + 1) + "/" +
                            std::to_string(max_attempts);
    if (!res) {
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      if (log_) log_(tag + " -> " + httplib::to_string(err));
      if (timed_out && attempt + 1 < max_attempts) {
        backoff(attempt);
        continue;
      }
      throw BackendError(timed_out ? BackendErrorKind::timeout : BackendErrorKind::transport,
                         "remote request failed: " + httplib::to_string(err), 0, attempt + 1);
    }
    if (log_) log_(tag + " -> " + std::to_string(res->status));
    if (res->status >= 200 && res->status < 300) return parse_completion_response(res->body, request.params);
    if (retryable_status(res->status) && attempt + 1 < max_attempts) {
      backoff(attempt);
      continue;
    }
    throw BackendError(BackendErrorKind::http_status,
                       "remote endpoint returned HTTP " + std::to_string(res->status), res->status, attempt + 1);
  }
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor) {
  descriptor.validate();
  if (descriptor.kind == BackendKind::local) return LocalBackend::open(descriptor);
  return std::make_unique<RemoteBackend>(descriptor);
}

}  // namespace ideaforge::backends
