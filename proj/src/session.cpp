#include "ideaforge/session.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "ideaforge/error.hpp"
#include "ideaforge/json_io.hpp"

namespace ideaforge::service {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::regex& id_pattern() {
  static const std::regex re("[A-Za-z0-9_-]{1,64}");
  return re;
}

void check_id(const std::string& id) {
  if (!std::regex_match(id, id_pattern())) {
    throw ValidationError("session id '" + id + "' must be 1-64 characters of [A-Za-z0-9_-]");
  }
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string candidate_id(const std::string& session_id, std::size_t ordinal) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", ordinal);
  return session_id + "-c" + buf;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string random_id() {
  std::random_device rd;
  std::uniform_int_distribution<int> digit(0, 15);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id(16, '0');
  for (char& c : id) c = kHex[digit(rd)];
  return id;
}

json inputs_to_json(const SessionInputs& inputs) {
  return std::visit([](const auto& v) { return json(v); }, inputs);
}

SessionInputs inputs_from_json(eval::Mode mode, const json& j) {
  if (mode == eval::Mode::problem_driven) return j.get<prompting::ProblemPrompt>();
  return j.get<prompting::AnalogyPrompt>();
}

eval::CandidateInputs candidate_inputs(const SessionInputs& inputs) {
  eval::CandidateInputs out;
  if (const auto* p = std::get_if<prompting::ProblemPrompt>(&inputs)) {
    out.category = p->category;
    out.problem_statement = p->problem_statement;
  } else {
    const auto& a = std::get<prompting::AnalogyPrompt>(inputs);
    out.source_domain = a.query_source;
    out.target_domain = a.query_target;
  }
  return out;
}

eval::ConceptCandidate* find_mut(IdeationSession& s, std::string_view id) {
  for (auto& c : s.history) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<SessionEvent> parse_event_lines(std::istream& in, std::size_t first_line = 1) {
  std::vector<SessionEvent> events;
  std::string line;
  std::size_t n = first_line - 1;
  while (std::getline(in, line)) {
    ++n;
    if (blank(line)) continue;
    try {
      events.push_back(event_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(n, std::string("bad event: ") + e.what());
    } catch (const ValidationError& e) {
      throw ParseError(n, e.what());
    }
  }
  return events;
}

}  // namespace

const eval::ConceptCandidate* IdeationSession::find_candidate(std::string_view candidate_id) const {
  for (const auto& c : history) {
    if (c.id == candidate_id) return &c;
  }
  return nullptr;
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::created: return "created";
    case EventKind::params_changed: return "params_changed";
    case EventKind::batch_generated: return "batch_generated";
    case EventKind::verdict_recorded: return "verdict_recorded";
    case EventKind::exported: return "exported";
  }
  return "created";
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (auto k : {EventKind::created, EventKind::params_changed, EventKind::batch_generated,
                 EventKind::verdict_recorded, EventKind::exported}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

json to_json(const IdeationSession& s) {
  return json{{"id", s.id},
              {"mode", eval::to_string(s.mode)},
              {"inputs", inputs_to_json(s.inputs)},
              {"params", s.params},
              {"backend", s.backend},
              {"thresholds", s.thresholds},
              {"history", s.history},
              {"created_at", s.created_at},
              {"updated_at", s.updated_at},
              {"next_batch", s.next_batch},
              {"last_seq", s.last_seq}};
}

IdeationSession session_from_json(const json& j) {
  IdeationSession s;
  try {
    s.id = j.at("id").get<std::string>();
    auto mode = eval::parse_mode(j.at("mode").get<std::string>());
    if (!mode) throw ValidationError("unknown session mode");
    s.mode = *mode;
    s.inputs = inputs_from_json(s.mode, j.at("inputs"));
    j.at("params").get_to(s.params);
    j.at("backend").get_to(s.backend);
    j.at("thresholds").get_to(s.thresholds);
    j.at("history").get_to(s.history);
    s.created_at = j.at("created_at").get<std::string>();
    s.updated_at = j.at("updated_at").get<std::string>();
    s.next_batch = j.at("next_batch").get<std::uint64_t>();
    s.last_seq = j.at("last_seq").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad session state: ") + e.what());
  }
  return s;
}

json to_json(const SessionEvent& e) {
  return json{{"seq", e.seq}, {"kind", to_string(e.kind)}, {"payload", e.payload}, {"timestamp", e.timestamp}};
}

SessionEvent event_from_json(const json& j) {
  SessionEvent e;
  try {
    e.seq = j.at("seq").get<std::uint64_t>();
    auto kind = parse_event_kind(j.at("kind").get<std::string>());
    if (!kind) throw ValidationError("unknown event kind");
    e.kind = *kind;
    e.payload = j.at("payload");
    e.timestamp = j.at("timestamp").get<std::string>();
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("bad event: ") + ex.what());
  }
  return e;
}

void validate_setup(eval::Mode mode, const SessionInputs& inputs, const decoding::DecodingParams& params,
                    const backends::BackendDescriptor& backend, const eval::Thresholds& thresholds) {
  const bool problem_inputs = std::holds_alternative<prompting::ProblemPrompt>(inputs);
  if ((mode == eval::Mode::problem_driven) != problem_inputs) {
    throw ValidationError(std::string("mode ") + std::string(eval::to_string(mode)) + " needs " +
                          (mode == eval::Mode::problem_driven ? "problem" : "analogy") + " inputs");
  }
  std::visit([](const auto& v) { v.validate(); }, inputs);
  params.validate();
  backend.validate();
  thresholds.validate();
  // Remote endpoints cannot honour top_k; refuse it here rather than at the first batch.
  if (backend.kind == backends::BackendKind::remote) backends::map_params_remote(params, backend.drop_top_k);
}

void apply_event(IdeationSession& s, const SessionEvent& e) {
  if (e.seq != s.last_seq + 1) {
    throw ParseError(0, "event seq " + std::to_string(e.seq) + " does not follow " + std::to_string(s.last_seq));
  }
  if ((e.kind == EventKind::created) != (s.last_seq == 0)) {
    throw ParseError(0, "created must be the first event and appear once");
  }
  const auto& p = e.payload;
  try {
    switch (e.kind) {
      case EventKind::created: {
        IdeationSession fresh;
        fresh.id = p.at("id").get<std::string>();
        auto mode = eval::parse_mode(p.at("mode").get<std::string>());
        if (!mode) throw ValidationError("unknown session mode");
        fresh.mode = *mode;
        fresh.inputs = inputs_from_json(fresh.mode, p.at("inputs"));
        p.at("params").get_to(fresh.params);
        p.at("backend").get_to(fresh.backend);
        p.at("thresholds").get_to(fresh.thresholds);
        validate_setup(fresh.mode, fresh.inputs, fresh.params, fresh.backend, fresh.thresholds);
        fresh.created_at = e.timestamp;
        s = std::move(fresh);
        break;
      }
      case EventKind::params_changed: {
        auto params = s.params;
        p.at("params").get_to(params);
        params.validate();
        s.params = std::move(params);
        break;
      }
      case EventKind::batch_generated: {
        const auto index = p.at("batch_index").get<std::uint64_t>();
        if (index != s.next_batch) throw ParseError(0, "batch index " + std::to_string(index) + " out of order");
        std::vector<eval::ConceptCandidate> added;
        if (auto it = p.find("candidates"); it != p.end()) it->get_to(added);
        for (const auto& c : added) {
          if (c.text.empty()) throw ParseError(0, "candidate " + c.id + " has empty text");
          if (s.find_candidate(c.id)) throw ParseError(0, "duplicate candidate id " + c.id);
          s.history.push_back(c);
        }
        s.next_batch = index + 1;
        break;
      }
      case EventKind::verdict_recorded: {
        const auto cid = p.at("candidate_id").get<std::string>();
        auto verdict = eval::parse_verdict(p.at("verdict").get<std::string>());
        if (!verdict || *verdict == eval::Verdict::pending) throw ParseError(0, "bad verdict in event");
        auto* c = find_mut(s, cid);
        if (!c) throw ParseError(0, "verdict for unknown candidate " + cid);
        if (c->verdict != eval::Verdict::pending) throw ParseError(0, "second verdict for " + cid);
        c->verdict = *verdict;
        break;
      }
      case EventKind::exported:
        break;
    }
  } catch (const json::exception& ex) {
    throw ParseError(0, std::string("bad ") + std::string(to_string(e.kind)) + " payload: " + ex.what());
  }
  s.last_seq = e.seq;
  s.updated_at = e.timestamp;
}

IdeationSession replay(const std::vector<SessionEvent>& events) {
  IdeationSession s;
  for (const auto& e : events) apply_event(s, e);
  if (s.last_seq == 0) throw ParseError(0, "no events to replay");
  return s;
}

std::uint64_t batch_seed(std::uint64_t session_seed, std::uint64_t batch_index) {
  std::uint64_t z = session_seed + batch_index + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::string> reference_texts(const IdeationSession& s) {
  std::vector<std::string> refs;
  if (const auto* a = std::get_if<prompting::AnalogyPrompt>(&s.inputs)) {
    for (const auto& e : a->examples) refs.push_back(e.description);
  }
  for (const auto& c : s.history) {
    if (c.verdict == eval::Verdict::accepted) refs.push_back(c.text);
  }
  return refs;
}

std::string anchor_text(const IdeationSession& s) {
  if (const auto* p = std::get_if<prompting::ProblemPrompt>(&s.inputs)) return p->problem_statement;
  return std::get<prompting::AnalogyPrompt>(s.inputs).query_target;
}

std::string build_prompt(const IdeationSession& s, const corpus::Delimiters& delims,
                         const prompting::ScaffoldStyle& scaffold) {
  if (const auto* p = std::get_if<prompting::ProblemPrompt>(&s.inputs)) return prompting::build_problem_prompt(*p, delims);
  return prompting::build_analogy_prompt(std::get<prompting::AnalogyPrompt>(s.inputs), scaffold);
}

// --- BackendCache -----------------------------------------------------------

void BackendCache::add(const backends::BackendDescriptor& descriptor, std::shared_ptr<backends::Backend> backend) {
  std::lock_guard lock(mutex_);
  backends_[json(descriptor).dump()] = std::move(backend);
}

std::shared_ptr<backends::Backend> BackendCache::get(const backends::BackendDescriptor& descriptor) {
  const auto key = json(descriptor).dump();
  std::lock_guard lock(mutex_);
  if (auto it = backends_.find(key); it != backends_.end()) return it->second;
  std::shared_ptr<backends::Backend> made = backends::make_backend(descriptor);
  backends_[key] = made;
  return made;
}

BackendProvider BackendCache::provider() {
  return [this](const backends::BackendDescriptor& d) { return get(d); };
}

std::function<std::string()> fixed_clock(std::string timestamp) {
  return [timestamp = std::move(timestamp)] { return timestamp; };
}

std::function<std::string()> sequential_ids(std::string prefix) {
  auto counter = std::make_shared<std::atomic<std::uint64_t>>(0);
  return [prefix = std::move(prefix), counter] {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%04llu", static_cast<unsigned long long>(++*counter));
    return prefix + buf;
  };
}

// --- SessionStore -----------------------------------------------------------

struct SessionStore::Entry {
  mutable std::shared_mutex mutex;
  IdeationSession state;
  std::vector<SessionEvent> events;
  fs::path dir;
};

SessionStore::SessionStore(BackendProvider provider, StoreOptions options)
    : provider_(std::move(provider)), options_(std::move(options)) {
  if (!options_.clock) options_.clock = utc_now;
  if (!options_.id_generator) options_.id_generator = random_id;
  options_.thresholds.validate();
  if (options_.data_dir) {
    fs::create_directories(*options_.data_dir / "sessions");
    load_all();
  }
}

SessionStore::~SessionStore() = default;

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& session_id) const {
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("no session '" + session_id + "'");
  return it->second;
}

SessionEvent SessionStore::make_event(Entry& entry, EventKind kind, json payload) {
  return SessionEvent{entry.state.last_seq + 1, kind, std::move(payload), options_.clock()};
}

void SessionStore::commit(Entry& entry, const SessionEvent& event) {
  IdeationSession next = entry.state;
  apply_event(next, event);
  if (!entry.dir.empty()) {
    fs::create_directories(entry.dir);
    {
      std::ofstream log(entry.dir / "events.jsonl", std::ios::binary | std::ios::app);
      log << to_json(event).dump() << '\n';
      log.flush();
      if (!log) throw Error("cannot append to event log in " + entry.dir.string());
    }
    if (options_.snapshot_interval > 0 && event.seq % options_.snapshot_interval == 0) {
      write_atomic(entry.dir / "snapshot.json", to_json(next).dump() + "\n");
    }
  }
  entry.state = std::move(next);
  entry.events.push_back(event);
}

void SessionStore::load_all() {
  for (const auto& dirent : fs::directory_iterator(*options_.data_dir / "sessions")) {
    if (!dirent.is_directory()) continue;
    const auto log_path = dirent.path() / "events.jsonl";
    if (!fs::exists(log_path)) continue;
    auto entry = std::make_shared<Entry>();
    entry->dir = dirent.path();
    std::ifstream in(log_path, std::ios::binary);
    try {
      entry->events = parse_event_lines(in);
      IdeationSession state;
      std::size_t start = 0;
      const auto snap_path = dirent.path() / "snapshot.json";
      if (fs::exists(snap_path)) {
        std::ifstream snap(snap_path, std::ios::binary);
        auto candidate = session_from_json(json::parse(snap));
        if (candidate.last_seq <= entry->events.size()) {
          state = std::move(candidate);
          start = state.last_seq;
        }
      }
      for (std::size_t i = start; i < entry->events.size(); ++i) apply_event(state, entry->events[i]);
      if (state.last_seq == 0) continue;
      entry->state = std::move(state);
    } catch (const std::exception& e) {
      throw ParseError(0, "cannot load session from " + dirent.path().string() + ": " + e.what());
    }
    sessions_[entry->state.id] = std::move(entry);
  }
}

IdeationSession SessionStore::create_session(eval::Mode mode, SessionInputs inputs, decoding::DecodingParams params,
                                             backends::BackendDescriptor backend,
                                             std::optional<eval::Thresholds> thresholds) {
  const auto th = thresholds.value_or(options_.thresholds);
  validate_setup(mode, inputs, params, backend, th);

  std::unique_lock lock(mutex_);
  std::string id = options_.id_generator();
  check_id(id);
  if (sessions_.count(id)) throw ConflictError("session id '" + id + "' already exists");

  auto entry = std::make_shared<Entry>();
  if (options_.data_dir) entry->dir = *options_.data_dir / "sessions" / id;
  json payload{{"id", id},
               {"mode", eval::to_string(mode)},
               {"inputs", inputs_to_json(inputs)},
               {"params", params},
               {"backend", backend},
               {"thresholds", th}};
  commit(*entry, make_event(*entry, EventKind::created, std::move(payload)));
  sessions_[id] = entry;
  return entry->state;
}

std::vector<eval::ConceptCandidate> SessionStore::generate_batch(const std::string& session_id, std::size_t count) {
  if (count == 0) throw ValidationError("count must be >= 1");
  auto entry = find(session_id);
  std::unique_lock lock(entry->mutex);
  const IdeationSession& s = entry->state;

  const std::uint64_t index = s.next_batch;
  const std::uint64_t seed = batch_seed(s.params.seed, index);
  auto params = s.params;
  if (s.mode == eval::Mode::analogy && params.stop.empty()) params.stop = {std::string(prompting::kAnalogyStop)};
  auto references = reference_texts(s);
  references.insert(references.end(), options_.corpus_references.begin(), options_.corpus_references.end());
  const eval::EvaluationContext context{std::move(references), anchor_text(s), s.thresholds};
  const auto inputs = candidate_inputs(s.inputs);

  std::vector<eval::ConceptCandidate> made;
  std::size_t discarded = 0;
  try {
    auto backend = provider_(s.backend);
    if (!backend) throw backends::BackendError(backends::BackendErrorKind::config, "no backend for session");
    const std::string prompt = build_prompt(s, options_.delims, options_.scaffold);
    std::uint64_t offset = 0;
    for (std::size_t round = 0; made.size() < count && round <= options_.max_refills; ++round) {
      backends::CompletionRequest request{prompt, params};
      request.params.n_candidates = count - made.size();
      request.params.seed = seed + offset;
      offset += request.params.n_candidates;
      for (auto& r : backend->complete(request)) {
        if (blank(r.text)) {
          ++discarded;
          continue;
        }
        eval::ConceptCandidate c;
        c.id = candidate_id(s.id, s.history.size() + made.size() + 1);
        c.text = r.text;
        c.mode = s.mode;
        c.inputs = inputs;
        c.params = r.params;
        c.backend = s.backend;
        c.scores = eval::evaluate(c.text, context);
        c.generation = std::move(r);
        made.push_back(std::move(c));
      }
    }
  } catch (const backends::BackendError& e) {
    json error{{"kind", backends::to_string(e.kind())}, {"message", e.what()}};
    if (e.status()) error["status"] = e.status();
    if (e.attempts()) error["attempts"] = e.attempts();
    commit(*entry, make_event(*entry, EventKind::batch_generated,
                              json{{"batch_index", index}, {"seed", seed}, {"requested", count}, {"error", error}}));
    throw;
  }

  json payload{{"batch_index", index},
               {"seed", seed},
               {"requested", count},
               {"candidates", made},
               {"discarded_empty", discarded}};
  commit(*entry, make_event(*entry, EventKind::batch_generated, std::move(payload)));
  return made;
}

IdeationSession SessionStore::update_params(const std::string& session_id, const decoding::DecodingParams& params) {
  auto entry = find(session_id);
  std::unique_lock lock(entry->mutex);
  validate_setup(entry->state.mode, entry->state.inputs, params, entry->state.backend, entry->state.thresholds);
  commit(*entry, make_event(*entry, EventKind::params_changed, json{{"params", params}}));
  return entry->state;
}

eval::ConceptCandidate SessionStore::record_verdict(const std::string& session_id, const std::string& candidate_id,
                                                    eval::Verdict verdict) {
  if (verdict == eval::Verdict::pending) throw ValidationError("verdict must be accepted or rejected");
  auto entry = find(session_id);
  std::unique_lock lock(entry->mutex);
  const auto* c = entry->state.find_candidate(candidate_id);
  if (!c) throw NotFoundError("no candidate '" + candidate_id + "' in session '" + session_id + "'");
  if (c->verdict != eval::Verdict::pending) {
    throw ConflictError("candidate '" + candidate_id + "' already " + std::string(eval::to_string(c->verdict)));
  }
  commit(*entry, make_event(*entry, EventKind::verdict_recorded,
                            json{{"candidate_id", candidate_id}, {"verdict", eval::to_string(verdict)}}));
  return *entry->state.find_candidate(candidate_id);
}

std::string SessionStore::export_session(const std::string& session_id) {
  auto entry = find(session_id);
  std::unique_lock lock(entry->mutex);
  std::ostringstream out;
  json header{{"format", kExportFormat},
              {"version", kExportVersion},
              {"session", to_json(entry->state)},
              {"created", to_json(entry->events.front())}};
  out << header.dump() << '\n';
  for (std::size_t i = 1; i < entry->events.size(); ++i) out << to_json(entry->events[i]).dump() << '\n';
  std::string document = out.str();
  commit(*entry, make_event(*entry, EventKind::exported, json::object()));
  return document;
}

IdeationSession SessionStore::import_session(std::string_view document) {
  std::istringstream in{std::string(document)};
  std::string line;
  if (!std::getline(in, line) || blank(line)) throw ParseError(1, "missing export header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(1, std::string("bad header: ") + e.what());
  }
  if (!header.is_object() || header.value("format", "") != kExportFormat) {
    throw ParseError(1, "not an exported session");
  }
  if (header.value("version", 0) != kExportVersion) throw ParseError(1, "unsupported export version");
  if (!header.contains("session") || !header.contains("created")) throw ParseError(1, "header lacks session state");

  auto entry = std::make_shared<Entry>();
  try {
    entry->events.push_back(event_from_json(header.at("created")));
  } catch (const ValidationError& e) {
    throw ParseError(1, e.what());
  }
  for (auto& e : parse_event_lines(in, 2)) entry->events.push_back(std::move(e));
  entry->state = replay(entry->events);
  if (to_json(entry->state) != header.at("session")) {
    throw ParseError(1, "replayed events disagree with the exported state");
  }
  check_id(entry->state.id);

  std::unique_lock lock(mutex_);
  if (sessions_.count(entry->state.id)) throw ConflictError("session '" + entry->state.id + "' already exists");
  if (options_.data_dir) {
    entry->dir = *options_.data_dir / "sessions" / entry->state.id;
    fs::create_directories(entry->dir);
    std::string log;
    for (const auto& e : entry->events) log += to_json(e).dump() + "\n";
    write_atomic(entry->dir / "events.jsonl", log);
    write_atomic(entry->dir / "snapshot.json", to_json(entry->state).dump() + "\n");
  }
  sessions_[entry->state.id] = entry;
  return entry->state;
}

IdeationSession SessionStore::get(const std::string& session_id) const {
  auto entry = find(session_id);
  std::shared_lock lock(entry->mutex);
  return entry->state;
}

std::vector<IdeationSession> SessionStore::list() const {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [id, e] : sessions_) entries.push_back(e);
  }
  std::vector<IdeationSession> out;
  for (const auto& e : entries) {
    std::shared_lock lock(e->mutex);
    out.push_back(e->state);
  }
  return out;
}

std::vector<SessionEvent> SessionStore::events(const std::string& session_id) const {
  auto entry = find(session_id);
  std::shared_lock lock(entry->mutex);
  return entry->events;
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

}  // namespace ideaforge::service
