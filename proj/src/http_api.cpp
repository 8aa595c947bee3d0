#include "ideaforge/http_api.hpp"

#include <memory>

#include "httplib.h"
#include "ideaforge/error.hpp"
#include "ideaforge/json_io.hpp"

namespace ideaforge::service {
namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body);  // json::parse_error maps to 400 below
  if (!body.is_object()) throw ValidationError("request body must be a JSON object");
  return body;
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const NotFoundError& e) {
      send_json(res, 404, {{"error", e.what()}});
    } catch (const ConflictError& e) {
      send_json(res, 409, {{"error", e.what()}});
    } catch (const backends::BackendError& e) {
      json body{{"error", e.what()}, {"kind", backends::to_string(e.kind())}};
      if (e.status()) body["status"] = e.status();
      send_json(res, 502, body);
    } catch (const ValidationError& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const ParseError& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", std::string("bad JSON: ") + e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}});
    }
  };
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError("unknown field '" + key + "'");
    }
  }
}

}  // namespace

json session_summary(const IdeationSession& s) {
  return json{{"id", s.id},
              {"mode", eval::to_string(s.mode)},
              {"backend", backends::to_string(s.backend.kind)},
              {"candidates", s.history.size()},
              {"created_at", s.created_at},
              {"updated_at", s.updated_at}};
}

void register_routes(httplib::Server& server, SessionStore& store, ApiDefaults defaults) {
  auto cfg = std::make_shared<const ApiDefaults>(std::move(defaults));

  server.Get("/healthz", guarded([&store](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}, {"sessions", store.size()}});
  }));

  server.Post("/sessions", guarded([&store, cfg](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    check_keys(body, {"mode", "inputs", "params", "backend", "thresholds"});
    if (!body.contains("mode")) throw ValidationError("missing field 'mode'");
    auto mode = eval::parse_mode(body.at("mode").get<std::string>());
    if (!mode) throw ValidationError("mode must be \"problem_driven\" or \"analogy\"");
    if (!body.contains("inputs")) throw ValidationError("missing field 'inputs'");

    SessionInputs inputs;
    if (*mode == eval::Mode::problem_driven) {
      inputs = body.at("inputs").get<prompting::ProblemPrompt>();
    } else {
      auto a = body.at("inputs").get<prompting::AnalogyPrompt>();
      if (a.examples.empty() && !body.at("inputs").contains("examples")) a.examples = cfg->bank;
      inputs = std::move(a);
    }

    auto params = cfg->params;
    if (auto it = body.find("params"); it != body.end()) it->get_to(params);

    backends::BackendDescriptor backend;
    if (auto it = body.find("backend"); it != body.end()) {
      if (cfg->backend) backend = *cfg->backend;
      it->get_to(backend);
    } else if (cfg->backend) {
      backend = *cfg->backend;
    } else {
      throw ValidationError("no backend configured; pass one in the request");
    }

    std::optional<eval::Thresholds> thresholds;
    if (auto it = body.find("thresholds"); it != body.end()) {
      eval::Thresholds t;
      it->get_to(t);
      thresholds = t;
    }
    const auto session = store.create_session(*mode, std::move(inputs), params, backend, thresholds);
    send_json(res, 201, to_json(session));
  }));

  server.Get("/sessions", guarded([&store](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& s : store.list()) list.push_back(session_summary(s));
    send_json(res, 200, {{"sessions", list}});
  }));

  server.Get(R"(/sessions/([A-Za-z0-9_-]+))", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, to_json(store.get(req.matches[1])));
  }));

  server.Post(R"(/sessions/([A-Za-z0-9_-]+)/generate)",
              guarded([&store](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req);
                check_keys(body, {"count", "params"});
                const std::string id = req.matches[1];
                const auto it_count = body.find("count");
                if (it_count == body.end() || !it_count->is_number_unsigned()) {
                  throw ValidationError("count must be a positive integer");
                }
                const auto count = it_count->get<std::size_t>();
                if (count == 0) throw ValidationError("count must be a positive integer");
                if (auto it = body.find("params"); it != body.end()) {
                  auto params = store.get(id).params;
                  const auto before = params;
                  it->get_to(params);
                  if (params != before) store.update_params(id, params);
                }
                const auto made = store.generate_batch(id, count);
                send_json(res, 200, {{"candidates", made}});
              }));

  server.Post(R"(/sessions/([A-Za-z0-9_-]+)/candidates/([A-Za-z0-9_-]+)/verdict)",
              guarded([&store](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req);
                check_keys(body, {"verdict"});
                if (!body.contains("verdict")) throw ValidationError("missing field 'verdict'");
                auto verdict = eval::parse_verdict(body.at("verdict").get<std::string>());
                if (!verdict || *verdict == eval::Verdict::pending) {
                  throw ValidationError("verdict must be \"accepted\" or \"rejected\"");
                }
                send_json(res, 200, store.record_verdict(req.matches[1], req.matches[2], *verdict));
              }));

  server.Get(R"(/sessions/([A-Za-z0-9_-]+)/export)",
             guarded([&store](const httplib::Request& req, httplib::Response& res) {
               res.status = 200;
               res.set_content(store.export_session(req.matches[1]), "application/x-ndjson");
             }));
}

}  // namespace ideaforge::service
