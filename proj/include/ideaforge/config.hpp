#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "ideaforge/backends.hpp"
#include "ideaforge/decoder.hpp"
#include "ideaforge/evaluator.hpp"

namespace ideaforge::config {

/// Defaults for the CLI and the service.
///
/// File format: `key = value` lines, `[section]` headers prefix the keys that
/// follow, `#` starts a comment. Values are JSON literals (strings quoted).
///
///   [decoding]  max_tokens temperature top_k top_p presence_penalty
///               frequency_penalty stop seed n
///   [evaluator] novelty_threshold min_len max_len novelty_weight
///               relevance_weight ngram
///   [remote]    base_url model credential_env timeout_ms max_retries
///               backoff_ms max_in_flight drop_top_k
///   [service]   port data_dir model bank corpus snapshot_interval
inline backends::BackendDescriptor remote_defaults() {
  backends::BackendDescriptor d;
  d.kind = backends::BackendKind::remote;
  return d;
}

struct ServiceConfig {
  decoding::DecodingParams params;
  eval::Thresholds thresholds;
  /// Remote settings; kind is always remote. Used when base_url is set.
  backends::BackendDescriptor remote = remote_defaults();
  int port = 8080;
  std::string data_dir = "./data";
  std::string model;
  std::string bank;
  /// Corpus whose descriptions count as novelty references.
  std::string corpus;
  std::size_t snapshot_interval = 16;

  /// Local descriptor when a model is configured, else remote when a base
  /// URL is configured, else nothing.
  std::optional<backends::BackendDescriptor> default_backend() const;
};

/// Applies settings on top of `base`. Unknown keys, bad values and
/// malformed lines raise ParseError with the line number.
ServiceConfig parse_config(std::istream& in, ServiceConfig base = {});
ServiceConfig load_config(const std::filesystem::path& path, ServiceConfig base = {});

}  // namespace ideaforge::config
