#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ideaforge/logit_source.hpp"
#include "ideaforge/textkit.hpp"

namespace ideaforge::decoding {

using textkit::TokenId;

/// Below this temperature decoding switches to greedy argmax.
inline constexpr double kGreedyTemperature = 0.01;
inline constexpr std::size_t kMaxStopSequences = 4;

/// Stop string implied by the training framing; always active.
inline constexpr std::string_view kEndOfTextMarker = "<|endoftext|>";

/// Generation controls, grouped as content/format (max_tokens, stop),
/// randomness (temperature, top_k, top_p) and repetitiveness (penalties).
struct DecodingParams {
  std::size_t max_tokens = 256;
  double temperature = 1.0;
  std::size_t top_k = 0;  // 0 disables
  double top_p = 1.0;
  double presence_penalty = 0.0;
  double frequency_penalty = 0.0;
  std::vector<std::string> stop;
  std::uint64_t seed = 0;
  std::size_t n_candidates = 4;

  /// Throws ValidationError naming the offending field.
  void validate() const;

  friend bool operator==(const DecodingParams&, const DecodingParams&) = default;
};

/// Named starting points for the two generation modes. Both leave
/// max_tokens, stop and seed at their defaults.
///   problem-driven: temperature 0.85, top_k 40, top_p 1
///   analogy:        temperature 0.85, top_p 1, presence 0.5, frequency 0.5
struct ParamPreset {
  std::string name;
  DecodingParams params;
};

const std::vector<ParamPreset>& param_presets();

/// Throws ValidationError for unknown names.
DecodingParams preset(std::string_view name);

enum class FinishReason { stop, length };

std::string_view to_string(FinishReason r);
std::optional<FinishReason> parse_finish_reason(std::string_view s);

struct GenerationResult {
  std::string text;
  std::vector<TokenId> token_ids;
  FinishReason finish_reason = FinishReason::length;
  /// Set whenever finish_reason is stop; `text` never contains it.
  std::optional<std::string> matched_stop;
  std::vector<double> logprobs;
  DecodingParams params;
  /// Verbatim endpoint response for remote completions.
  std::optional<std::string> raw_response;

  friend bool operator==(const GenerationResult&, const GenerationResult&) = default;
};

/// Seeded 64-bit generator: std::mt19937_64 (whose output sequence the C++
/// standard fixes), with uniform doubles formed from the top 53 bits. Both
/// steps are exact, so draws are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// l'[j] = l[j] - presence * [counts[j] > 0] - frequency * counts[j].
std::vector<double> apply_penalties(std::span<const double> logits, std::span<const std::uint32_t> counts,
                                    double presence_penalty, double frequency_penalty);

/// l / T. Callers handle T < kGreedyTemperature by switching to argmax.
std::vector<double> apply_temperature(std::span<const double> logits, double temperature);

/// Keeps the k largest entries (lower id wins ties) and sets the rest to -inf.
/// k = 0 or k >= size leaves logits unchanged.
std::vector<double> top_k_filter(std::span<const double> logits, std::size_t k);

/// Numerically stable softmax; -inf entries map to exactly 0.
std::vector<double> softmax(std::span<const double> logits);

/// Nucleus filter over a probability vector summing to 1 (within 1e-9).
/// Keeps the shortest prefix of the descending order (lower id first on ties)
/// whose mass reaches p, zeroes the rest and renormalizes.
std::vector<double> top_p_filter(std::span<const double> probabilities, double p);

/// Inverse-CDF draw. Zero-probability entries are never returned.
TokenId sample_from_probabilities(std::span<const double> probabilities, Rng& rng);

/// softmax + sample_from_probabilities.
TokenId sample_token(std::span<const double> logits, Rng& rng);

/// Index of the largest entry; lowest index on ties.
TokenId argmax(std::span<const double> logits);

struct SampledToken {
  TokenId id = 0;
  double logprob = 0.0;
};

/// One decoding step on raw logits: penalties, temperature, top-k, softmax,
/// top-p, draw. `counts` are occurrence counts over the prompt plus
/// everything generated so far.
SampledToken sample_next(std::span<const double> logits, std::span<const std::uint32_t> counts,
                         const DecodingParams& params, Rng& rng);

/// Runs the full decoding loop from `prompt` until a stop string appears in
/// the decoded continuation, <eos> is drawn, or max_tokens tokens exist.
///
/// Stop strings are matched against the decoded text both verbatim and in
/// the normalized form the tokenizer would produce (lowercased, whitespace
/// collapsed), since locally decoded text only ever has that form.
GenerationResult generate(const LogitSource& source, std::span<const TokenId> prompt, const DecodingParams& params,
                          const textkit::Vocabulary& vocab);

}  // namespace ideaforge::decoding
