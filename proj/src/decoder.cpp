#include "ideaforge/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ideaforge/error.hpp"

namespace ideaforge::decoding {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Indices ordered by descending value, lower index first among equals.
std::vector<std::size_t> descending_order(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return idx;
}

struct StopPattern {
  std::string needle;
  std::string reported;
};

std::vector<StopPattern> stop_patterns(const DecodingParams& params) {
  std::vector<StopPattern> out;
  auto add = [&](const std::string& raw) {
    out.push_back({raw, raw});
    const auto tokens = textkit::tokenize(raw);
    if (tokens.empty()) return;
    std::string normalized;
    for (const auto& t : tokens) {
      if (!normalized.empty() && !textkit::is_punctuation_token(t)) normalized += ' ';
      normalized += t;
    }
    if (normalized != raw) out.push_back({std::move(normalized), raw});
  };
  for (const auto& s : params.stop) add(s);
  add(std::string(kEndOfTextMarker));
  return out;
}

}  // namespace

const std::vector<ParamPreset>& param_presets() {
  static const std::vector<ParamPreset> presets = [] {
    DecodingParams problem;
    problem.temperature = 0.85;
    problem.top_k = 40;
    problem.top_p = 1.0;
    DecodingParams analogy;
    analogy.temperature = 0.85;
    analogy.top_p = 1.0;
    analogy.presence_penalty = 0.5;
    analogy.frequency_penalty = 0.5;
    return std::vector<ParamPreset>{{"problem-driven", problem}, {"analogy", analogy}};
  }();
  return presets;
}

DecodingParams preset(std::string_view name) {
  for (const auto& p : param_presets()) {
    if (p.name == name) return p.params;
  }
  throw ValidationError("unknown preset '" + std::string(name) + "'");
}

void DecodingParams::validate() const {
  if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ValidationError("temperature must be > 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ValidationError("top_p must lie in (0, 1]");
  if (!(presence_penalty >= 0.0) || !std::isfinite(presence_penalty)) {
    throw ValidationError("presence_penalty must be >= 0");
  }
  if (!(frequency_penalty >= 0.0) || !std::isfinite(frequency_penalty)) {
    throw ValidationError("frequency_penalty must be >= 0");
  }
  if (stop.size() > kMaxStopSequences) throw ValidationError("stop accepts at most 4 strings");
  for (const auto& s : stop) {
    if (s.empty()) throw ValidationError("stop strings must be nonempty");
  }
  if (n_candidates < 1) throw ValidationError("n_candidates must be >= 1");
}

std::string_view to_string(FinishReason r) { return r == FinishReason::stop ? "stop" : "length"; }

std::optional<FinishReason> parse_finish_reason(std::string_view s) {
  if (s == "stop") return FinishReason::stop;
  if (s == "length") return FinishReason::length;
  return std::nullopt;
}

std::vector<double> apply_penalties(std::span<const double> logits, std::span<const std::uint32_t> counts,
                                    double presence_penalty, double frequency_penalty) {
  if (logits.size() != counts.size()) {
    throw ValidationError("penalty counts length " + std::to_string(counts.size()) + " != logits length " +
                          std::to_string(logits.size()));
  }
  std::vector<double> out(logits.begin(), logits.end());
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (counts[j] == 0) continue;
    out[j] -= presence_penalty + frequency_penalty * static_cast<double>(counts[j]);
  }
  return out;
}

std::vector<double> apply_temperature(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw ValidationError("temperature must be > 0");
  std::vector<double> out(logits.begin(), logits.end());
  for (double& x : out) x /= temperature;
  return out;
}

std::vector<double> top_k_filter(std::span<const double> logits, std::size_t k) {
  std::vector<double> out(logits.begin(), logits.end());
  if (k == 0 || k >= logits.size()) return out;
  const auto order = descending_order(logits);
  for (std::size_t r = k; r < order.size(); ++r) out[order[r]] = kNegInf;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  double max = kNegInf;
  for (double x : logits) max = std::max(max, x);
  if (!std::isfinite(max)) throw ValidationError("softmax needs at least one finite logit");
  std::vector<double> out(logits.size(), 0.0);
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (logits[j] == kNegInf) continue;
    out[j] = std::exp(logits[j] - max);
    sum += out[j];
  }
  for (double& x : out) x /= sum;
  return out;
}

std::vector<double> top_p_filter(std::span<const double> probabilities, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ValidationError("top_p must lie in (0, 1]");
  const double total = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("top_p_filter input must sum to 1");
  std::vector<double> out(probabilities.begin(), probabilities.end());
  if (p >= 1.0) return out;

  const auto order = descending_order(probabilities);
  double cumulative = 0.0;
  std::size_t keep = 0;
  while (keep < order.size()) {
    cumulative += probabilities[order[keep]];
    ++keep;
    if (cumulative >= p) break;
  }
  for (std::size_t r = keep; r < order.size(); ++r) out[order[r]] = 0.0;
  for (double& x : out) x /= cumulative;
  return out;
}

TokenId sample_from_probabilities(std::span<const double> probabilities, Rng& rng) {
  double total = 0.0;
  std::size_t last_positive = probabilities.size();
  for (std::size_t j = 0; j < probabilities.size(); ++j) {
    if (probabilities[j] > 0.0) {
      total += probabilities[j];
      last_positive = j;
    }
  }
  if (last_positive == probabilities.size()) throw ValidationError("cannot sample from an all-zero distribution");
  const double target = rng.uniform() * total;
  double cumulative = 0.0;
  for (std::size_t j = 0; j < probabilities.size(); ++j) {
    if (probabilities[j] <= 0.0) continue;
    cumulative += probabilities[j];
    if (target < cumulative) return static_cast<TokenId>(j);
  }
  return static_cast<TokenId>(last_positive);
}

TokenId sample_token(std::span<const double> logits, Rng& rng) {
  return sample_from_probabilities(softmax(logits), rng);
}

TokenId argmax(std::span<const double> logits) {
  if (logits.empty()) throw ValidationError("argmax of empty logits");
  std::size_t best = 0;
  for (std::size_t j = 1; j < logits.size(); ++j) {
    if (logits[j] > logits[best]) best = j;
  }
  return static_cast<TokenId>(best);
}

SampledToken sample_next(std::span<const double> logits, std::span<const std::uint32_t> counts,
                         const DecodingParams& params, Rng& rng) {
  auto adjusted = apply_penalties(logits, counts, params.presence_penalty, params.frequency_penalty);
  if (params.temperature < kGreedyTemperature) return {argmax(adjusted), 0.0};
  adjusted = apply_temperature(adjusted, params.temperature);
  adjusted = top_k_filter(adjusted, params.top_k);
  auto probs = top_p_filter(softmax(adjusted), params.top_p);
  const TokenId id = sample_from_probabilities(probs, rng);
  return {id, std::log(probs[id])};
}

GenerationResult generate(const LogitSource& source, std::span<const TokenId> prompt, const DecodingParams& params,
                          const textkit::Vocabulary& vocab) {
  params.validate();
  if (prompt.empty()) throw ValidationError("prompt must be nonempty");
  const std::size_t V = source.vocab_size();
  if (V != vocab.size()) throw ValidationError("logit source and vocabulary disagree on size");

  const auto stops = stop_patterns(params);
  std::vector<TokenId> context(prompt.begin(), prompt.end());
  std::vector<std::uint32_t> counts(V, 0);
  for (TokenId id : prompt) {
    if (id >= V) throw ValidationError("prompt token id " + std::to_string(id) + " outside vocabulary");
    ++counts[id];
  }

  Rng rng(params.seed);
  GenerationResult result;
  result.params = params;
  std::string text;

  while (result.token_ids.size() < params.max_tokens) {
    const auto logits = source.next_token_logits(context);
    if (logits.size() != V) throw Error("logit source returned " + std::to_string(logits.size()) + " logits, expected " + std::to_string(V));
    const auto tok = sample_next(logits, counts, params, rng);
    result.token_ids.push_back(tok.id);
    result.logprobs.push_back(tok.logprob);
    context.push_back(tok.id);
    ++counts[tok.id];

    if (tok.id == textkit::kEosId) {
      result.text = std::move(text);
      result.finish_reason = FinishReason::stop;
      result.matched_stop = std::string(textkit::kEosToken);
      return result;
    }
    // Same joining rule as textkit::decode, applied incrementally.
    if (tok.id != textkit::kBosId) {
      const auto& piece = vocab.token(tok.id);
      if (!text.empty() && !textkit::is_punctuation_token(piece)) text += ' ';
      text += piece;
    }

    std::size_t first = std::string::npos;
    const StopPattern* hit = nullptr;
    for (const auto& s : stops) {
      const auto pos = text.find(s.needle);
      if (pos < first) {
        first = pos;
        hit = &s;
      }
    }
    if (hit) {
      result.text = text.substr(0, first);
      // Normalized needles drop the stop's own surrounding whitespace.
      if (hit->needle != hit->reported) {
        while (!result.text.empty() && result.text.back() == ' ') result.text.pop_back();
      }
      result.finish_reason = FinishReason::stop;
      result.matched_stop = hit->reported;
      return result;
    }
  }
  result.text = std::move(text);
  result.finish_reason = FinishReason::length;
  return result;
}

}  // namespace ideaforge::decoding
