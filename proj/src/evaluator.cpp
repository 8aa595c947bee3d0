#include "ideaforge/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ideaforge/error.hpp"
#include "ideaforge/textkit.hpp"

namespace ideaforge::eval {
namespace {

std::set<NGram> ngrams_of(std::span<const std::string> tokens, std::size_t n) {
  std::set<NGram> out;
  if (n == 0 || tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) out.emplace(tokens.begin() + i, tokens.begin() + i + n);
  return out;
}

std::map<std::string, double> term_frequencies(std::string_view text) {
  std::map<std::string, double> tf;
  for (auto& w : content_words(text)) tf[std::move(w)] += 1.0;
  return tf;
}

}  // namespace

std::set<NGram> ngram_set(std::string_view text, std::size_t n) {
  const auto tokens = textkit::tokenize(text);
  return ngrams_of(tokens, n);
}

double jaccard(const std::set<NGram>& a, const std::set<NGram>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t shared = 0;
  for (const auto& g : a) shared += b.count(g);
  return static_cast<double>(shared) / static_cast<double>(a.size() + b.size() - shared);
}

double novelty_score(std::string_view candidate, std::span<const std::string> references, std::size_t n) {
  const auto cand = ngram_set(candidate, n);
  if (cand.empty()) return 0.0;
  double max_overlap = 0.0;
  for (const auto& ref : references) max_overlap = std::max(max_overlap, jaccard(cand, ngram_set(ref, n)));
  return 1.0 - max_overlap;
}

bool repetition_flag(std::string_view text) {
  const auto tokens = textkit::tokenize(text);
  if (tokens.size() < 4) return false;
  std::map<std::vector<std::string>, int> seen;
  for (std::size_t i = 0; i + 4 <= tokens.size(); ++i) {
    if (++seen[{tokens.begin() + i, tokens.begin() + i + 4}] >= 3) return true;
  }
  return false;
}

double distinct_n(std::span<const std::string> tokens, std::size_t n) {
  if (n == 0 || tokens.size() < n) return 0.0;
  const std::size_t total = tokens.size() - n + 1;
  return static_cast<double>(ngrams_of(tokens, n).size()) / static_cast<double>(total);
}

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a",       "about",  "above",   "after",   "again",   "all",     "also",   "am",     "an",      "and",
      "any",     "are",    "as",      "at",      "be",      "because", "been",   "before", "being",   "below",
      "between", "both",   "but",     "by",      "can",     "could",   "did",    "do",     "does",    "doing",
      "down",    "during", "each",    "either",  "even",    "every",   "few",    "for",    "from",    "further",
      "had",     "has",    "have",    "having",  "he",      "her",     "here",   "hers",   "herself", "him",
      "himself", "his",    "how",     "i",       "if",      "in",      "into",   "is",     "it",      "its",
      "itself",  "just",   "may",     "me",      "might",   "more",    "most",   "must",   "my",      "myself",
      "no",      "nor",    "not",     "now",     "of",      "off",     "on",     "once",   "one",     "only",
      "or",      "other",  "our",     "ours",    "out",     "over",    "own",    "same",   "she",     "should",
      "so",      "some",   "such",    "than",    "that",    "the",     "their",  "theirs", "them",    "then",
      "there",   "these",  "they",    "this",    "those",   "through", "thus",   "to",     "too",     "under",
      "until",   "up",     "upon",    "us",      "very",    "was",     "we",     "were",   "what",    "when",
      "where",   "which",  "while",   "who",     "whom",    "why",     "will",   "with",   "within",  "without",
      "would",   "yet",    "you",     "your",    "yours",   "s",       "t"};
  return words;
}

std::vector<std::string> content_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : textkit::tokenize(text)) {
    if (textkit::is_punctuation_token(t) || stopwords().contains(t)) continue;
    out.push_back(std::move(t));
  }
  return out;
}

double relevance_score(std::string_view candidate, std::string_view anchor) {
  const auto a = term_frequencies(candidate);
  const auto b = term_frequencies(anchor);
  if (a.empty() || b.empty()) return 0.0;
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [w, x] : a) {
    na += x * x;
    if (auto it = b.find(w); it != b.end()) dot += x * it->second;
  }
  for (const auto& [w, y] : b) nb += y * y;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

void Thresholds::validate() const {
  if (!(novelty >= 0.0 && novelty <= 1.0)) throw ValidationError("novelty threshold must lie in [0, 1]");
  if (min_len > max_len) throw ValidationError("min_len must not exceed max_len");
  if (novelty_weight < 0.0 || relevance_weight < 0.0 || std::abs(novelty_weight + relevance_weight - 1.0) > 1e-9) {
    throw ValidationError("evaluator weights must be nonnegative and sum to 1");
  }
  if (ngram < 1) throw ValidationError("novelty n-gram size must be >= 1");
}

EvaluationReport evaluate(std::string_view text, const EvaluationContext& context) {
  const auto& t = context.thresholds;
  t.validate();
  EvaluationReport r;
  r.token_count = textkit::tokenize(text).size();
  r.novelty = novelty_score(text, context.references, t.ngram);
  r.relevance = relevance_score(text, context.anchor);
  r.repetition_flag = repetition_flag(text);
  r.length_ok = r.token_count >= t.min_len && r.token_count <= t.max_len;
  r.novelty_ok = r.novelty >= t.novelty;
  if (!r.repetition_flag && r.length_ok && r.novelty_ok) {
    r.composite = t.novelty_weight * r.novelty + t.relevance_weight * r.relevance;
  }
  return r;
}

std::string_view to_string(Mode m) { return m == Mode::problem_driven ? "problem_driven" : "analogy"; }

std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "problem_driven") return Mode::problem_driven;
  if (s == "analogy") return Mode::analogy;
  return std::nullopt;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pending: return "pending";
    case Verdict::accepted: return "accepted";
    case Verdict::rejected: return "rejected";
  }
  return "pending";
}

std::optional<Verdict> parse_verdict(std::string_view s) {
  if (s == "pending") return Verdict::pending;
  if (s == "accepted") return Verdict::accepted;
  if (s == "rejected") return Verdict::rejected;
  return std::nullopt;
}

std::vector<ConceptCandidate> rank_and_filter(std::span<const ConceptCandidate> candidates, const Thresholds& thresholds) {
  thresholds.validate();
  std::vector<ConceptCandidate> kept;
  for (const auto& c : candidates) {
    if (!c.scores) throw ValidationError("candidate " + c.id + " has not been evaluated");
    const auto& s = *c.scores;
    if (s.repetition_flag || !s.length_ok || s.novelty < thresholds.novelty) continue;
    kept.push_back(c);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const ConceptCandidate& a, const ConceptCandidate& b) {
    if (a.scores->composite != b.scores->composite) return a.scores->composite > b.scores->composite;
    return a.id < b.id;
  });
  return kept;
}

}  // namespace ideaforge::eval
