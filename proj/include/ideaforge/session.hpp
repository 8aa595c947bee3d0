#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ideaforge/backends.hpp"
#include "ideaforge/corpus.hpp"
#include "ideaforge/decoder.hpp"
#include "ideaforge/evaluator.hpp"
#include "ideaforge/prompting.hpp"
#include "json.hpp"

namespace ideaforge::service {

using SessionInputs = std::variant<prompting::ProblemPrompt, prompting::AnalogyPrompt>;

/// One configured experiment: mode, inputs, params and backend, plus every
/// candidate generated for it. Only ever changed by applying events.
struct IdeationSession {
  std::string id;
  eval::Mode mode = eval::Mode::problem_driven;
  SessionInputs inputs;
  decoding::DecodingParams params;
  backends::BackendDescriptor backend;
  eval::Thresholds thresholds;
  std::vector<eval::ConceptCandidate> history;
  std::string created_at;
  std::string updated_at;
  std::uint64_t next_batch = 0;
  std::uint64_t last_seq = 0;

  const eval::ConceptCandidate* find_candidate(std::string_view candidate_id) const;

  friend bool operator==(const IdeationSession&, const IdeationSession&) = default;
};

enum class EventKind { created, params_changed, batch_generated, verdict_recorded, exported };

std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view s);

struct SessionEvent {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::created;
  nlohmann::json payload;
  std::string timestamp;

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

nlohmann::json to_json(const IdeationSession& s);
IdeationSession session_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SessionEvent& e);
SessionEvent event_from_json(const nlohmann::json& j);

/// Checks mode against the input variant, then validates inputs, params,
/// backend and thresholds. Throws ValidationError.
void validate_setup(eval::Mode mode, const SessionInputs& inputs, const decoding::DecodingParams& params,
                    const backends::BackendDescriptor& backend, const eval::Thresholds& thresholds);

/// Applies one event. `created` must come first and only once; sequence
/// numbers must continue the session's gap-free run. Throws ParseError on
/// an inconsistent event stream.
void apply_event(IdeationSession& session, const SessionEvent& event);

/// Rebuilds a session from its full event stream.
IdeationSession replay(const std::vector<SessionEvent>& events);

/// Seed for batch `batch_index`: splitmix64(session_seed + batch_index).
std::uint64_t batch_seed(std::uint64_t session_seed, std::uint64_t batch_index);

/// Novelty references for the next batch: bank descriptions (analogy mode)
/// followed by accepted candidate texts.
std::vector<std::string> reference_texts(const IdeationSession& session);

/// Problem statement in problem mode, target domain in analogy mode.
std::string anchor_text(const IdeationSession& session);

/// Prompt text sent to the backend for this session.
std::string build_prompt(const IdeationSession& session, const corpus::Delimiters& delims = {},
                         const prompting::ScaffoldStyle& scaffold = {});

/// Header line magic for exported documents.
inline constexpr std::string_view kExportFormat = "ideaforge-session";
inline constexpr int kExportVersion = 1;

/// Resolves a descriptor to a live backend.
using BackendProvider = std::function<std::shared_ptr<backends::Backend>(const backends::BackendDescriptor&)>;

/// Builds each distinct descriptor once with make_backend and reuses it.
/// Pre-registered backends take precedence.
class BackendCache {
 public:
  void add(const backends::BackendDescriptor& descriptor, std::shared_ptr<backends::Backend> backend);
  std::shared_ptr<backends::Backend> get(const backends::BackendDescriptor& descriptor);
  BackendProvider provider();

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<backends::Backend>> backends_;
};

struct StoreOptions {
  /// Sessions persist under data_dir/sessions/<id>/ when set.
  std::optional<std::filesystem::path> data_dir;
  /// Timestamp source; defaults to UTC ISO-8601 wall clock.
  std::function<std::string()> clock;
  /// Session id source; defaults to 16 random hex digits.
  std::function<std::string()> id_generator;
  eval::Thresholds thresholds;
  /// Novelty references shared by every session, such as corpus descriptions.
  std::vector<std::string> corpus_references;
  /// A snapshot is written after every this many events (0 disables).
  std::size_t snapshot_interval = 16;
  prompting::ScaffoldStyle scaffold;
  corpus::Delimiters delims;
  /// Extra backend requests allowed per batch to replace empty generations.
  std::size_t max_refills = 4;
};

/// Fixed-format clock and counter ids, for reproducible runs.
std::function<std::string()> fixed_clock(std::string timestamp);
std::function<std::string()> sequential_ids(std::string prefix = "s");

/// Sessions with a single writer each and any number of readers. Every
/// change goes through an event that is applied, then appended to the
/// session's log before the call returns.
class SessionStore {
 public:
  SessionStore(BackendProvider provider, StoreOptions options = {});
  ~SessionStore();

  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  IdeationSession create_session(eval::Mode mode, SessionInputs inputs, decoding::DecodingParams params,
                                 backends::BackendDescriptor backend,
                                 std::optional<eval::Thresholds> thresholds = std::nullopt);

  /// Generates `count` candidates, evaluates and appends them. On backend
  /// failure an error event is recorded, history is left alone and the
  /// BackendError is rethrown.
  std::vector<eval::ConceptCandidate> generate_batch(const std::string& session_id, std::size_t count);

  IdeationSession update_params(const std::string& session_id, const decoding::DecodingParams& params);

  eval::ConceptCandidate record_verdict(const std::string& session_id, const std::string& candidate_id,
                                        eval::Verdict verdict);

  /// JSONL: a header line holding the state and the creation event, then one
  /// line per later event. Records an `exported` event afterwards.
  std::string export_session(const std::string& session_id);

  /// Replays an exported document into a new session. Throws ParseError on
  /// malformed or inconsistent input, ConflictError if the id exists.
  IdeationSession import_session(std::string_view document);

  IdeationSession get(const std::string& session_id) const;
  std::vector<IdeationSession> list() const;
  std::vector<SessionEvent> events(const std::string& session_id) const;
  std::size_t size() const;

 private:
  struct Entry;

  std::shared_ptr<Entry> find(const std::string& session_id) const;
  SessionEvent make_event(Entry& entry, EventKind kind, nlohmann::json payload);
  void commit(Entry& entry, const SessionEvent& event);
  void load_all();

  BackendProvider provider_;
  StoreOptions options_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace ideaforge::service
