#include <cstdlib>
#include <thread>

#include "doctest.h"
#include "ideaforge/backends.hpp"
#include "mock_endpoint.hpp"
#include "test_support.hpp"

using namespace ideaforge;
using namespace ideaforge::backends;
using std::chrono::milliseconds;

namespace {

constexpr const char* kKey = "sk-test-0123456789abcdef";

struct KeyEnv {
  KeyEnv() { ::setenv("IDEAFORGE_API_KEY", kKey, 1); }
};

BackendDescriptor remote_for(const testing::MockEndpoint& ep) {
  BackendDescriptor d;
  d.kind = BackendKind::remote;
  d.base_url = ep.base_url();
  d.model_name = "completion-model";
  d.timeout = milliseconds(2000);
  return d;
}

CompletionRequest request(std::size_t n = 2) {
  CompletionRequest r;
  r.prompt = "Applying lantern to drone:\n";
  r.params.n_candidates = n;
  r.params.max_tokens = 64;
  r.params.temperature = 0.8;
  r.params.top_p = 0.95;
  r.params.seed = 5;
  return r;
}

struct Capture {
  std::vector<std::string> lines;
  std::vector<milliseconds> sleeps;
  RemoteBackend::LogSink log() {
    return [this](std::string_view s) { lines.emplace_back(s); };
  }
  RemoteBackend::Sleeper sleeper() {
    return [this](milliseconds d) { sleeps.push_back(d); };
  }
};

BackendError backend_error(RemoteBackend& b, const CompletionRequest& r) {
  try {
    b.complete(r);
  } catch (const BackendError& e) {
    return e;
  }
  FAIL("expected BackendError");
  return BackendError(BackendErrorKind::config, "");
}

}  // namespace

TEST_SUITE("backends") {
  TEST_CASE("request body carries exactly the mapped fields") {
    KeyEnv env;
    testing::MockEndpoint ep;
    Capture cap;
    RemoteBackend b(remote_for(ep), cap.log(), cap.sleeper());
    auto r = request();
    r.params.stop = {"\nApplying "};
    const auto out = b.complete(r);
    REQUIRE(out.size() == 2);
    REQUIRE(ep.hits() == 1);
    const auto seen = ep.seen()[0];
    CHECK(seen.authorization == std::string("Bearer ") + kKey);
    const auto body = nlohmann::json::parse(seen.body);
    std::set<std::string> keys;
    for (const auto& [k, v] : body.items()) keys.insert(k);
    CHECK(keys == std::set<std::string>{"model", "prompt", "max_tokens", "temperature", "top_p", "presence_penalty",
                                        "frequency_penalty", "stop", "n"});
    CHECK(body["model"] == "completion-model");
    CHECK(body["prompt"] == r.prompt);
    CHECK(body["max_tokens"] == 64);
    CHECK(body["temperature"] == 0.8);
    CHECK(body["top_p"] == 0.95);
    CHECK(body["stop"] == nlohmann::json::array({"\nApplying "}));
    CHECK(body["n"] == 2);
    CHECK(out[0].text == "choice 0");
    CHECK(out[1].text == "choice 1");
    CHECK(out[0].params == r.params);
    CHECK(out[0].raw_response.has_value());
  }

  TEST_CASE("empty stop is omitted") {
    const auto m = map_params_remote(request().params);
    CHECK_FALSE(m.fields.contains("stop"));
    CHECK(m.fields.size() == 6);
  }

  TEST_CASE("top_k is rejected before any request unless dropped") {
    KeyEnv env;
    testing::MockEndpoint ep;
    RemoteBackend b(remote_for(ep));
    auto r = request();
    r.params.top_k = 40;
    CHECK_THROWS_AS(b.complete(r), ValidationError);
    CHECK(ep.hits() == 0);

    auto d = remote_for(ep);
    d.drop_top_k = true;
    Capture cap;
    RemoteBackend lenient(d, cap.log(), cap.sleeper());
    CHECK(lenient.complete(r).size() == 2);
    REQUIRE(ep.hits() == 1);
    CHECK_FALSE(nlohmann::json::parse(ep.seen()[0].body).contains("top_k"));
    REQUIRE_FALSE(cap.lines.empty());
    CHECK(cap.lines[0].find("top_k") != std::string::npos);
  }

  TEST_CASE("429 twice then success takes three attempts with bounded backoff") {
    KeyEnv env;
    testing::MockEndpoint ep;
    ep.script({429, 429});
    Capture cap;
    RemoteBackend b(remote_for(ep), cap.log(), cap.sleeper());
    CHECK(b.complete(request()).size() == 2);
    CHECK(ep.hits() == 3);
    REQUIRE(cap.sleeps.size() == 2);
    CHECK(cap.sleeps[0] < milliseconds(500));
    CHECK(cap.sleeps[1] < milliseconds(1000));
  }

  TEST_CASE("5xx exhausts the retry budget") {
    KeyEnv env;
    testing::MockEndpoint ep;
    ep.script({503, 500, 502, 504, 500});
    Capture cap;
    RemoteBackend b(remote_for(ep), cap.log(), cap.sleeper());
    const auto e = backend_error(b, request());
    CHECK(e.kind() == BackendErrorKind::http_status);
    CHECK(e.status() == 504);
    CHECK(e.attempts() == 4);
    CHECK(ep.hits() == 4);
    CHECK(cap.sleeps.size() == 3);
  }

  TEST_CASE("other 4xx are not retried") {
    KeyEnv env;
    testing::MockEndpoint ep;
    ep.script({400});
    Capture cap;
    RemoteBackend b(remote_for(ep), cap.log(), cap.sleeper());
    const auto e = backend_error(b, request());
    CHECK(e.status() == 400);
    CHECK(e.attempts() == 1);
    CHECK(cap.sleeps.empty());
  }

  TEST_CASE("timeouts are retried and then reported") {
    KeyEnv env;
    testing::MockEndpoint ep;
    ep.set_delay(milliseconds(400));
    auto d = remote_for(ep);
    d.timeout = milliseconds(100);
    d.retry.max_retries = 1;
    Capture cap;
    RemoteBackend b(d, cap.log(), cap.sleeper());
    const auto e = backend_error(b, request());
    CHECK(e.kind() == BackendErrorKind::timeout);
    CHECK(e.attempts() == 2);
  }

  TEST_CASE("connection failures are transport errors") {
    KeyEnv env;
    std::string dead;
    {
      testing::MockEndpoint ep;
      dead = ep.base_url();
    }
    BackendDescriptor d;
    d.kind = BackendKind::remote;
    d.base_url = dead;
    d.model_name = "m";
    Capture cap;
    RemoteBackend b(d, cap.log(), cap.sleeper());
    const auto e = backend_error(b, request());
    CHECK(e.kind() == BackendErrorKind::transport);
    CHECK(e.attempts() == 1);
  }

  TEST_CASE("missing credential is a config error") {
    testing::MockEndpoint ep;
    auto d = remote_for(ep);
    d.credential_env = "IDEAFORGE_TEST_UNSET_KEY";
    ::unsetenv("IDEAFORGE_TEST_UNSET_KEY");
    RemoteBackend b(d);
    CHECK(backend_error(b, request()).kind() == BackendErrorKind::config);
    CHECK(ep.hits() == 0);
  }

  TEST_CASE("malformed responses") {
    const auto p = request().params;
    for (const std::string body : {"not json", "{}", R"({"choices":[{"text":1},{"text":"b"}]})",
                                   R"({"choices":[{"text":"a"}]})", R"({"choices":[{"text":"a","finish_reason":3},{"text":"b"}]})"}) {
      try {
        parse_completion_response(body, p);
        FAIL("accepted " << body);
      } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::malformed_response);
      }
    }
    KeyEnv env;
    testing::MockEndpoint ep;
    ep.set_raw_body("{\"choices\":");
    RemoteBackend b(remote_for(ep));
    CHECK(backend_error(b, request()).kind() == BackendErrorKind::malformed_response);
  }

  TEST_CASE("response parsing orders by index and enforces stops") {
    auto p = request().params;
    p.stop = {"\nApplying "};
    const auto out = parse_completion_response(
        R"({"choices":[{"index":1,"text":"b","finish_reason":"stop"},)"
        R"({"index":0,"text":"a lamp\nApplying kite","finish_reason":"length"}]})",
        p);
    CHECK(out[0].text == "a lamp");
    CHECK(out[0].matched_stop == "\nApplying ");
    CHECK(out[0].finish_reason == decoding::FinishReason::stop);
    CHECK(out[1].text == "b");
    CHECK(out[1].matched_stop == std::string(kEndpointStop));
  }

  TEST_CASE("in-flight limit is respected") {
    KeyEnv env;
    testing::MockEndpoint ep;
    ep.set_delay(milliseconds(80));
    auto d = remote_for(ep);
    d.max_in_flight = 2;
    RemoteBackend b(d);
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i) threads.emplace_back([&] { b.complete(request(1)); });
    for (auto& t : threads) t.join();
    CHECK(ep.hits() == 6);
    CHECK(ep.max_concurrent() <= 2);
    CHECK(ep.max_concurrent() >= 1);
  }

  TEST_CASE("the key never reaches logs, errors or results") {
    KeyEnv env;
    testing::MockEndpoint ep;
    ep.script({500});
    Capture cap;
    RemoteBackend b(remote_for(ep), cap.log(), cap.sleeper());
    const auto out = b.complete(request());
    for (const auto& l : cap.lines) CHECK(l.find(kKey) == std::string::npos);
    for (const auto& r : out) CHECK(r.raw_response->find(kKey) == std::string::npos);
    ep.script({401});
    const auto e = backend_error(b, request());
    CHECK(std::string(e.what()).find(kKey) == std::string::npos);
  }

  TEST_CASE("descriptor validation") {
    BackendDescriptor d;
    d.kind = BackendKind::remote;
    CHECK_THROWS(d.validate());
    d.base_url = "ftp://x";
    d.model_name = "m";
    CHECK_THROWS(d.validate());
    d.base_url = "http://localhost:1";
    CHECK_NOTHROW(d.validate());
    BackendDescriptor local;
    CHECK_THROWS(local.validate());
    local.model_path = "/nonexistent/model.bin";
    try {
      LocalBackend::open(local);
      FAIL("opened a missing model");
    } catch (const BackendError& e) {
      CHECK(e.kind() == BackendErrorKind::model_load);
    }
  }

  TEST_CASE("local backend is deterministic and seeds candidates consecutively") {
    BackendDescriptor d;
    d.model_path = "(memory)";
    LocalBackend b(testing::shared_mini_model(), d);
    auto r = request(3);
    const auto a = b.complete(r);
    REQUIRE(a.size() == 3);
    CHECK(a == b.complete(r));
    for (std::size_t i = 0; i < 3; ++i) {
      auto one = r;
      one.params.n_candidates = 1;
      one.params.seed = r.params.seed + i;
      const auto single = b.complete(one);
      CHECK(single[0].text == a[i].text);
      CHECK(single[0].token_ids == a[i].token_ids);
    }
    const auto ids = b.encode_prompt("<|startoftext|>Kitchen\nLids");
    CHECK(ids.front() == textkit::kBosId);
    CHECK(ids == b.encode_prompt("Kitchen\nLids"));
  }
}
