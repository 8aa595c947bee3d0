#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ideaforge/backends.hpp"
#include "ideaforge/decoder.hpp"

namespace ideaforge::eval {

using NGram = std::vector<std::string>;

/// Word n-grams over textkit tokens. Empty when the text has fewer than n tokens.
std::set<NGram> ngram_set(std::string_view text, std::size_t n);

/// |A & B| / |A | B|; 0 when both are empty.
double jaccard(const std::set<NGram>& a, const std::set<NGram>& b);

/// 1 - max_r Jaccard(ngrams(candidate), ngrams(r)). A candidate shorter than
/// n tokens scores 0; with no references the max is taken as 0.
double novelty_score(std::string_view candidate, std::span<const std::string> references, std::size_t n = 4);

/// True iff some word 4-gram occurs at least 3 times.
bool repetition_flag(std::string_view text);

/// Unique n-grams / total n-grams of a token sequence; 0 when it has no n-grams.
double distinct_n(std::span<const std::string> tokens, std::size_t n);

/// English function words ignored by relevance_score: articles, pronouns,
/// auxiliaries, prepositions, conjunctions and a few high-frequency adverbs.
const std::set<std::string, std::less<>>& stopwords();

/// Tokens that are neither punctuation nor stopwords.
std::vector<std::string> content_words(std::string_view text);

/// Cosine similarity of content-word term-frequency vectors, in [0, 1].
/// 0 when either side has no content words.
double relevance_score(std::string_view candidate, std::string_view anchor);

struct Thresholds {
  double novelty = 0.3;
  std::size_t min_len = 30;
  std::size_t max_len = 400;
  double novelty_weight = 0.5;
  double relevance_weight = 0.5;
  std::size_t ngram = 4;

  /// Weights must be nonnegative and sum to 1; min_len <= max_len; ngram >= 1.
  void validate() const;

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

struct EvaluationReport {
  double novelty = 0.0;
  double relevance = 0.0;
  bool repetition_flag = false;
  bool length_ok = false;
  bool novelty_ok = false;
  /// novelty_weight * novelty + relevance_weight * relevance, or 0 when any
  /// gate (repetition, length, novelty threshold) fails.
  double composite = 0.0;
  std::size_t token_count = 0;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

struct EvaluationContext {
  std::vector<std::string> references;
  std::string anchor;
  Thresholds thresholds;
};

EvaluationReport evaluate(std::string_view text, const EvaluationContext& context);

enum class Mode { problem_driven, analogy };
enum class Verdict { pending, accepted, rejected };

std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view s);
std::string_view to_string(Verdict v);
std::optional<Verdict> parse_verdict(std::string_view s);

struct CandidateInputs {
  std::optional<std::string> category;
  std::optional<std::string> problem_statement;
  std::optional<std::string> source_domain;
  std::optional<std::string> target_domain;

  friend bool operator==(const CandidateInputs&, const CandidateInputs&) = default;
};

struct ConceptCandidate {
  std::string id;
  std::string text;
  Mode mode = Mode::problem_driven;
  CandidateInputs inputs;
  decoding::DecodingParams params;
  backends::BackendDescriptor backend;
  std::optional<decoding::GenerationResult> generation;
  std::optional<EvaluationReport> scores;
  Verdict verdict = Verdict::pending;

  friend bool operator==(const ConceptCandidate&, const ConceptCandidate&) = default;
};

/// Drops candidates that are repetition-flagged, out of length bounds or
/// below the novelty threshold, then orders the rest by composite descending
/// (candidate id ascending on ties). Throws ValidationError for candidates
/// that have not been evaluated.
std::vector<ConceptCandidate> rank_and_filter(std::span<const ConceptCandidate> candidates,
                                              const Thresholds& thresholds = {});

}  // namespace ideaforge::eval
