#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ideaforge/config.hpp"
#include "test_support.hpp"

using namespace ideaforge;
using namespace ideaforge::config;

namespace {

ServiceConfig parse(const std::string& text, ServiceConfig base = {}) {
  std::istringstream in(text);
  return parse_config(in, std::move(base));
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults") {
    const ServiceConfig c;
    CHECK(c.port == 8080);
    CHECK(c.remote.kind == backends::BackendKind::remote);
    CHECK_FALSE(c.default_backend().has_value());
    CHECK(parse("").params == decoding::DecodingParams{});
  }

  TEST_CASE("sections, comments and values") {
    const auto c = parse(R"(# defaults for the desk
[decoding]
temperature = 0.85   # warm
top_p = 1.0
stop = ["\nApplying ", "#end"]
n = 3
seed = 18446744073709551615

[evaluator]
novelty_threshold = 0.4
min_len = 20

[remote]
base_url = "http://localhost:9000"
model = "m"
backoff_ms = 100
drop_top_k = true

[service]
port = 9090
data_dir = "/tmp/ideaforge"
)");
    CHECK(c.params.temperature == 0.85);
    CHECK(c.params.stop == std::vector<std::string>{"\nApplying ", "#end"});
    CHECK(c.params.n_candidates == 3);
    CHECK(c.params.seed == 18446744073709551615ULL);
    CHECK(c.thresholds.novelty == 0.4);
    CHECK(c.thresholds.min_len == 20);
    CHECK(c.remote.retry.base_delay == std::chrono::milliseconds(100));
    CHECK(c.remote.drop_top_k);
    CHECK(c.port == 9090);
    CHECK(c.data_dir == "/tmp/ideaforge");
    const auto backend = c.default_backend();
    REQUIRE(backend.has_value());
    CHECK(backend->kind == backends::BackendKind::remote);
    CHECK(backend->base_url == "http://localhost:9000");
  }

  TEST_CASE("a configured model wins over a remote endpoint") {
    const auto c = parse("[service]\nmodel = \"m.bin\"\n[remote]\nbase_url = \"http://x\"\nmodel = \"m\"\n");
    REQUIRE(c.default_backend().has_value());
    CHECK(c.default_backend()->kind == backends::BackendKind::local);
    CHECK(c.default_backend()->model_path == "m.bin");
  }

  TEST_CASE("layering keeps earlier values") {
    ServiceConfig base;
    base.params.temperature = 0.5;
    const auto c = parse("[decoding]\ntop_p = 0.9\n", base);
    CHECK(c.params.temperature == 0.5);
    CHECK(c.params.top_p == 0.9);
  }

  TEST_CASE("errors carry the line number") {
    CHECK(error_of("[decoding]\nwarmth = 1\n").find("line 2") != std::string::npos);
    CHECK(error_of("\n\n[decoding]\ntemperature = hot\n").find("line 4") != std::string::npos);
    CHECK(error_of("just words\n").find("line 1") != std::string::npos);
    CHECK(error_of("[mystery]\nx = 1\n").find("line 2") != std::string::npos);
    CHECK(error_of("[decoding]\ntemperature = 0\n").size() > 0);
    CHECK(error_of("[decoding]\ntop_k = -3\n").find("line 2") != std::string::npos);
  }

  TEST_CASE("load_config reads files") {
    testing::TempDir dir;
    const auto path = dir.path() / "ideaforge.conf";
    std::ofstream(path) << "[service]\nport = 7000\n";
    CHECK(load_config(path).port == 7000);
    CHECK_THROWS(load_config(dir.path() / "missing.conf"));
  }
}
