#pragma once

#include <optional>
#include <vector>

#include "ideaforge/backends.hpp"
#include "ideaforge/decoder.hpp"
#include "ideaforge/prompting.hpp"
#include "ideaforge/session.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace ideaforge::service {

/// Values filled in when a create request leaves them out.
struct ApiDefaults {
  decoding::DecodingParams params;
  std::optional<backends::BackendDescriptor> backend;
  /// Used for analogy sessions whose inputs carry no examples.
  std::vector<prompting::AnalogyExample> bank;
};

/// JSON routes over a SessionStore:
///
///   POST /sessions                                  {mode, inputs, params?, backend?, thresholds?}
///   GET  /sessions
///   GET  /sessions/{id}
///   POST /sessions/{id}/generate                    {count, params?}
///   POST /sessions/{id}/candidates/{cid}/verdict    {verdict}
///   GET  /sessions/{id}/export                      JSONL
///   GET  /healthz
///
/// Errors are `{"error": message}` with 400 (bad input), 404 (unknown id),
/// 409 (conflicting state) or 502 (backend failure).
void register_routes(httplib::Server& server, SessionStore& store, ApiDefaults defaults);

/// Listing entry: id, mode, backend kind, candidate count, timestamps.
nlohmann::json session_summary(const IdeationSession& session);

}  // namespace ideaforge::service
