#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ideaforge/corpus.hpp"
#include "ideaforge/logit_source.hpp"
#include "ideaforge/textkit.hpp"

namespace ideaforge::lm {

using textkit::TokenId;

inline constexpr std::size_t kMaxOrder = 5;

struct ContextStats {
  std::uint64_t total = 0;
  std::map<TokenId, std::uint64_t> next;

  friend bool operator==(const ContextStats&, const ContextStats&) = default;
};

/// k-gram count tables for k = 1..order, keyed by the (k-1)-token context.
///
/// Every position of a sequence is a prediction target except a leading
/// <bos>; the context of a target is drawn only from tokens before it in the
/// same sequence, so the first targets of a sequence only feed the lower
/// orders.
class NGramCounts {
 public:
  explicit NGramCounts(std::size_t order);

  void add(std::span<const TokenId> sequence);

  std::size_t order() const noexcept { return levels_.size(); }

  /// Level k (1-based) maps contexts of length k-1 to their continuation counts.
  const std::map<std::vector<TokenId>, ContextStats>& level(std::size_t k) const { return levels_.at(k - 1); }

  /// nullptr when the context was never observed.
  const ContextStats* find(std::span<const TokenId> context) const;

  std::uint64_t count(std::span<const TokenId> context, TokenId next) const;
  std::uint64_t context_total(std::span<const TokenId> context) const;

  friend bool operator==(const NGramCounts&, const NGramCounts&) = default;

 private:
  friend class ModelCodec;
  std::vector<std::map<std::vector<TokenId>, ContextStats>> levels_;
};

/// Interpolated additively smoothed n-gram model.
///
///   P1(w)    = (c(w) + a) / (C + a|V|)
///   Pk(w|h)  = l (c(h,w) + a) / (c(h) + a|V|) + (1 - l) P(k-1)(w | tail(h))
///
/// where h is the longest available history of at most order-1 tokens and
/// tail(h) drops its oldest token. With a > 0 every token has positive
/// probability and each level is a proper distribution.
class NGramModel final : public LogitSource {
 public:
  NGramModel(textkit::Vocabulary vocab, NGramCounts counts, double alpha, double lambda);

  const textkit::Vocabulary& vocab() const noexcept { return vocab_; }
  const NGramCounts& counts() const noexcept { return counts_; }
  std::size_t order() const noexcept { return counts_.order(); }
  double alpha() const noexcept { return alpha_; }
  double lambda() const noexcept { return lambda_; }

  std::size_t vocab_size() const override { return vocab_.size(); }

  /// ln P(j | context) for every j. Throws ValidationError on ids outside the vocabulary.
  std::vector<double> next_token_logits(std::span<const TokenId> context) const override;
  std::vector<double> next_token_probabilities(std::span<const TokenId> context) const;

  /// P(next | context) evaluated for a single token.
  double probability(std::span<const TokenId> context, TokenId next) const;

  friend bool operator==(const NGramModel& a, const NGramModel& b) {
    return a.vocab_ == b.vocab_ && a.counts_ == b.counts_ && a.alpha_ == b.alpha_ && a.lambda_ == b.lambda_;
  }

 private:
  void check_ids(std::span<const TokenId> ids) const;
  std::span<const TokenId> history(std::span<const TokenId> context) const;

  textkit::Vocabulary vocab_;
  NGramCounts counts_;
  double alpha_;
  double lambda_;
};

struct TracePoint {
  std::size_t pass = 0;
  double avg_nll = 0.0;

  friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

/// One entry per training pass: average per-token NLL of the whole training
/// set under the model fitted to the first pass/passes fraction of it.
using TrainingTrace = std::vector<TracePoint>;

struct TrainOptions {
  std::size_t order = 3;
  double alpha = 0.1;
  double lambda = 0.7;
  std::size_t passes = 1;
};

struct TrainResult {
  NGramModel model;
  TrainingTrace trace;
};

/// Every sequence must start with <bos> and end with <eos>.
TrainResult train(const textkit::Vocabulary& vocab, std::span<const std::vector<TokenId>> sequences,
                  const TrainOptions& options = {});

/// Splits training text into blocks, strips the start/end markers and
/// tokenizes each block.
std::vector<std::vector<std::string>> tokenize_training_text(std::string_view text,
                                                             const corpus::Delimiters& delims = {});

/// <bos> + encode(block) + <eos> for every block.
std::vector<std::vector<TokenId>> frame_sequences(const textkit::Vocabulary& vocab,
                                                  std::span<const std::vector<std::string>> blocks);

/// Average negative log-likelihood per predicted token (see NGramCounts for
/// which positions are predicted).
double average_nll(const NGramModel& model, std::span<const std::vector<TokenId>> sequences);

/// exp(average_nll).
double perplexity(const NGramModel& model, std::span<const std::vector<TokenId>> sequences);

/// Model plus the trace it was trained with, as stored on disk.
struct ModelFile {
  NGramModel model;
  TrainingTrace trace;
};

/// Canonical binary format, little-endian, fixed-width integers:
///
///   "IFNG" u32:version(=1) u32:order f64:alpha f64:lambda
///   u32:|V| { u32:len bytes }*
///   for k in 1..order: u64:contexts { u32[k-1]:context u64:total u32:n { u32:token u64:count }* }*
///   u32:trace_len { u32:pass f64:avg_nll }*
///
/// f64 values are stored as their IEEE-754 bit patterns.
std::string serialize_model(const NGramModel& model, const TrainingTrace& trace = {});
ModelFile deserialize_model(std::string_view bytes);

void save(const NGramModel& model, const TrainingTrace& trace, const std::filesystem::path& path);
ModelFile load(const std::filesystem::path& path);

/// Human-readable JSON dump of the same content; not loadable.
std::string debug_dump(const NGramModel& model, const TrainingTrace& trace = {});

}  // namespace ideaforge::lm
