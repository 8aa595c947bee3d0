#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ideaforge::textkit {

using TokenId = std::uint32_t;

inline constexpr TokenId kUnkId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;

inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kBosToken = "<bos>";
inline constexpr std::string_view kEosToken = "<eos>";

/// Splits text into lowercased word tokens.
///
/// Rules: Unicode whitespace separates tokens; every punctuation or symbol
/// code point becomes a token on its own; any other maximal run of code
/// points (letters, digits, marks) is one token, so digit runs stay whole.
/// Invalid UTF-8 bytes are replaced by U+FFFD.
std::vector<std::string> tokenize(std::string_view text);

/// Lowercases UTF-8 text with the same case folding tokenize() applies.
std::string fold_case(std::string_view text);

/// True when `token` is exactly one punctuation/symbol code point.
bool is_punctuation_token(std::string_view token);

/// Token <-> id bijection with the reserved ids <unk>=0, <bos>=1, <eos>=2.
/// Immutable after construction.
class Vocabulary {
 public:
  /// The three reserved tokens only.
  Vocabulary();

  /// Builds from an ordered token list whose first three entries must be the
  /// reserved tokens. Throws ValidationError on duplicates or bad reserved slots.
  static Vocabulary from_tokens(std::vector<std::string> tokens, std::size_t min_count = 1);

  /// Parses the newline-delimited serialization (line number = id).
  static Vocabulary parse(std::string_view text);

  std::string serialize() const;

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t min_count() const noexcept { return min_count_; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  /// Throws std::out_of_range for ids >= size().
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> index_;
  std::size_t min_count_ = 1;
};

/// Keeps tokens seen at least `min_count` times, ordered by descending
/// frequency then bytewise-lexicographic, after the reserved slots.
/// Reserved token strings appearing in the input are ignored.
Vocabulary build_vocab(std::span<const std::vector<std::string>> corpora, std::size_t min_count = 1);

/// Out-of-vocabulary tokens map to <unk>.
std::vector<TokenId> encode(const Vocabulary& vocab, std::span<const std::string> tokens);

/// Joins tokens with single spaces; punctuation attaches to the preceding
/// token. <bos>/<eos> are dropped. Throws std::out_of_range on ids >= size().
std::string decode(const Vocabulary& vocab, std::span<const TokenId> ids);

}  // namespace ideaforge::textkit
