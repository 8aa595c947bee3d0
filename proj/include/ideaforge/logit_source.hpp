#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ideaforge/textkit.hpp"

namespace ideaforge {

/// Anything that scores the next token given a context of token ids.
/// Implementations must be safe for concurrent const calls.
class LogitSource {
 public:
  virtual ~LogitSource() = default;

  virtual std::size_t vocab_size() const = 0;

  /// One entry per vocabulary id. Entries may be -inf; at least one must be finite.
  virtual std::vector<double> next_token_logits(std::span<const textkit::TokenId> context) const = 0;
};

}  // namespace ideaforge
