#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "ideaforge/corpus.hpp"
#include "ideaforge/decoder.hpp"
#include "ideaforge/error.hpp"
#include "json.hpp"

namespace ideaforge::lm {
class NGramModel;
}

namespace ideaforge::backends {

/// Environment variable holding the remote API key.
inline constexpr std::string_view kDefaultCredentialEnv = "IDEAFORGE_API_KEY";

/// Reported as matched_stop when an endpoint says it stopped without naming the stop string.
inline constexpr std::string_view kEndpointStop = "<endpoint>";

enum class BackendKind { local, remote };

std::string_view to_string(BackendKind k);
std::optional<BackendKind> parse_backend_kind(std::string_view s);

struct RetryPolicy {
  std::size_t max_retries = 3;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30000};

  friend bool operator==(const RetryPolicy&, const RetryPolicy&) = default;
};

/// Where completions come from. Holds a credential *reference* (an
/// environment variable name), never the credential itself.
struct BackendDescriptor {
  BackendKind kind = BackendKind::local;
  std::string model_path;
  std::string base_url;
  std::string model_name;
  std::string credential_env = std::string(kDefaultCredentialEnv);
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
  std::size_t max_in_flight = 4;
  /// Silently omit top_k (with a warning) instead of rejecting it on remote endpoints.
  bool drop_top_k = false;

  void validate() const;

  friend bool operator==(const BackendDescriptor&, const BackendDescriptor&) = default;
};

struct CompletionRequest {
  std::string prompt;
  decoding::DecodingParams params;
};

enum class BackendErrorKind { config, model_load, timeout, transport, http_status, malformed_response };

std::string_view to_string(BackendErrorKind k);

class BackendError : public Error {
 public:
  BackendError(BackendErrorKind kind, const std::string& message, int status = 0, std::size_t attempts = 0)
      : Error(message), kind_(kind), status_(status), attempts_(attempts) {}

  BackendErrorKind kind() const noexcept { return kind_; }
  int status() const noexcept { return status_; }
  std::size_t attempts() const noexcept { return attempts_; }

 private:
  BackendErrorKind kind_;
  int status_;
  std::size_t attempts_;
};

/// Uniform completion contract shared by the local and remote backends.
class Backend {
 public:
  virtual ~Backend() = default;

  /// Returns exactly request.params.n_candidates results.
  virtual std::vector<decoding::GenerationResult> complete(const CompletionRequest& request) = 0;

  virtual const BackendDescriptor& descriptor() const = 0;
};

/// Reference n-gram model + decoder. Candidate i is decoded with seed + i,
/// so results are bit-reproducible.
class LocalBackend final : public Backend {
 public:
  LocalBackend(std::shared_ptr<const lm::NGramModel> model, BackendDescriptor descriptor,
               corpus::Delimiters delims = {});

  /// Loads the model named by descriptor.model_path. Throws BackendError(model_load).
  static std::unique_ptr<LocalBackend> open(const BackendDescriptor& descriptor, corpus::Delimiters delims = {});

  std::vector<decoding::GenerationResult> complete(const CompletionRequest& request) override;
  const BackendDescriptor& descriptor() const override { return descriptor_; }

  /// Prompt text to model ids: a leading start marker (or nothing) becomes <bos>.
  std::vector<textkit::TokenId> encode_prompt(std::string_view prompt) const;

  const lm::NGramModel& model() const { return *model_; }

 private:
  std::shared_ptr<const lm::NGramModel> model_;
  BackendDescriptor descriptor_;
  corpus::Delimiters delims_;
};

struct WireParams {
  nlohmann::ordered_json fields;
  std::vector<std::string> warnings;
};

/// Maps decoding params onto completion-endpoint field names: max_tokens,
/// temperature, top_p, presence_penalty, frequency_penalty, stop (omitted when
/// empty), n. Remote endpoints have no top-k: a nonzero top_k is rejected with
/// ValidationError unless drop_top_k is set, in which case it is omitted and
/// a warning recorded.
WireParams map_params_remote(const decoding::DecodingParams& params, bool drop_top_k = false);

/// Full request body: model, prompt and the mapped params.
nlohmann::ordered_json build_request_body(const CompletionRequest& request, std::string_view model_name,
                                          bool drop_top_k, std::vector<std::string>* warnings = nullptr);

/// Parses `choices[i].text` / `choices[i].finish_reason`. Throws
/// BackendError(malformed_response).
std::vector<decoding::GenerationResult> parse_completion_response(std::string_view body,
                                                                  const decoding::DecodingParams& params);

/// Client for an OpenAI-style `POST {base}/v1/completions` endpoint.
///
/// 429, 5xx and timeouts are retried up to retry.max_retries times with
/// full-jitter exponential backoff (delay drawn uniformly from
/// [0, min(max_delay, base_delay * 2^attempt))). Other 4xx codes and
/// connection failures are not retried. At most max_in_flight requests run
/// at once per client.
class RemoteBackend final : public Backend {
 public:
  using LogSink = std::function<void(std::string_view)>;
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit RemoteBackend(BackendDescriptor descriptor, LogSink log = {}, Sleeper sleeper = {});
  ~RemoteBackend() override;

  std::vector<decoding::GenerationResult> complete(const CompletionRequest& request) override;
  const BackendDescriptor& descriptor() const override { return descriptor_; }

 private:
  BackendDescriptor descriptor_;
  LogSink log_;
  Sleeper sleeper_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor);

}  // namespace ideaforge::backends
