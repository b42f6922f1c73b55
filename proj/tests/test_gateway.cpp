#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "cogtools/errors.hpp"
#include "cogtools/gateway.hpp"

using namespace cogtools;

namespace {

Message msg(Role role, std::string content) {
  Message m;
  m.role = role;
  m.content = std::move(content);
  return m;
}

ChatRequest simple_request(std::string user_text = "hello") {
  ChatRequest request;
  request.model = "test-model";
  request.messages = {msg(Role::system, "sys"),
                      msg(Role::user, std::move(user_text))};
  return request;
}

std::string ok_body(const std::string& content) {
  nlohmann::json body{
      {"choices",
       {{{"message", {{"role", "assistant"}, {"content", content}}},
         {"finish_reason", "stop"}}}},
      {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 34}}},
  };
  return body.dump();
}

// One handler-driven stub endpoint per test case.
struct StubServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  std::string url(const std::string& suffix = "") const {
    return "http://127.0.0.1:" + std::to_string(port) + suffix;
  }

  ~StubServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
};

HttpGatewayOptions fast_options(const std::string& base_url,
                                const std::string& api_key = "") {
  HttpGatewayOptions options;
  options.base_url = base_url;
  options.api_key = api_key;
  options.retry = RetryPolicy{3, std::chrono::milliseconds(5)};
  return options;
}

}  // namespace

TEST_CASE("scripted backend replays steps strictly in order") {
  ScriptedBackend backend({{"first", Role::user, "reply one"},
                           {"second", std::nullopt, "reply two"}});
  CHECK(backend.remaining() == 2);

  ChatResponse r1 = backend.complete(simple_request("the first question"));
  CHECK(r1.content == "reply one");
  CHECK(r1.finish_reason == FinishReason::stop);
  CHECK(r1.attempts == 1);
  CHECK(backend.consumed() == 1);

  ChatResponse r2 = backend.complete(simple_request("now the second one"));
  CHECK(r2.content == "reply two");
  CHECK(backend.remaining() == 0);
}

TEST_CASE("scripted backend rejects mismatches loudly") {
  SUBCASE("content matcher") {
    ScriptedBackend backend({{"needle", std::nullopt, "r"}});
    try {
      backend.complete(simple_request("no match here"));
      FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
      CHECK(e.kind == GatewayError::Kind::script_mismatch);
      CHECK(std::string(e.what()).find("step 0") != std::string::npos);
      CHECK(std::string(e.what()).find("needle") != std::string::npos);
    }
  }

  SUBCASE("role matcher") {
    ScriptedBackend backend({{"", Role::tool, "r"}});
    try {
      backend.complete(simple_request());
      FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
      CHECK(e.kind == GatewayError::Kind::script_mismatch);
      CHECK(std::string(e.what()).find("expected role tool") !=
            std::string::npos);
    }
  }

  SUBCASE("exhaustion") {
    ScriptedBackend backend({{"", std::nullopt, "only"}});
    backend.complete(simple_request());
    try {
      backend.complete(simple_request());
      FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
      CHECK(e.kind == GatewayError::Kind::script_exhausted);
    }
  }

  SUBCASE("empty request") {
    ScriptedBackend backend({{"", std::nullopt, "r"}});
    ChatRequest request;
    request.model = "m";
    CHECK_THROWS_AS(backend.complete(request), GatewayError);
  }

  SUBCASE("the matcher looks at the last message only") {
    ScriptedBackend backend({{"needle", std::nullopt, "r"}});
    ChatRequest request = simple_request("needle in the last message");
    request.messages.insert(request.messages.begin(),
                            msg(Role::user, "decoy"));
    CHECK(backend.complete(request).content == "r");
  }
}

TEST_CASE("script library forms") {
  SUBCASE("single script serves every id with a fresh cursor") {
    ScriptLibrary lib = ScriptLibrary::from_json_text(
        R"({"steps": [{"reply": "hi"}]})");
    auto a = lib.open("q1");
    auto b = lib.open("q2");
    CHECK(a->complete(simple_request()).content == "hi");
    CHECK(b->complete(simple_request()).content == "hi");  // independent
    CHECK(a->remaining() == 0);
  }

  SUBCASE("per-question map with default") {
    ScriptLibrary lib = ScriptLibrary::from_json_text(R"({
      "scripts": {"q1": {"steps": [{"reply": "one"}]}},
      "default": {"steps": [{"reply": "fallback"}]}
    })");
    CHECK(lib.open("q1")->complete(simple_request()).content == "one");
    CHECK(lib.open("zzz")->complete(simple_request()).content == "fallback");
  }

  SUBCASE("per-question map without default rejects unknown ids") {
    ScriptLibrary lib = ScriptLibrary::from_json_text(
        R"({"scripts": {"q1": {"steps": []}}})");
    CHECK_THROWS_AS(lib.open("q2"), ConfigError);
  }

  SUBCASE("matcher fields parse") {
    ScriptLibrary lib = ScriptLibrary::from_json_text(R"({
      "steps": [{"expect_contains": "x", "expect_role": "tool", "reply": "r"}]
    })");
    auto backend = lib.open("any");
    ChatRequest request = simple_request();
    request.messages.push_back(msg(Role::assistant, "call"));
    Message tool = msg(Role::tool, "x marks the spot");
    tool.tool_name = "use_code";
    request.messages.push_back(tool);
    CHECK(backend->complete(request).content == "r");
  }

  SUBCASE("malformed fixtures throw ConfigError") {
    CHECK_THROWS_AS(ScriptLibrary::from_json_text("not json"), ConfigError);
    CHECK_THROWS_AS(ScriptLibrary::from_json_text(R"({"steps": 5})"),
                    ConfigError);
    CHECK_THROWS_AS(
        ScriptLibrary::from_json_text(
            R"({"steps": [{"expect_role": "robot", "reply": "r"}]})"),
        ConfigError);
    CHECK_THROWS_AS(ScriptLibrary::from_file("/nonexistent/script.json"),
                    ConfigError);
  }
}

TEST_CASE("retry backoff doubles from the base delay") {
  RetryPolicy policy;  // 500ms base
  CHECK(retry_backoff(policy, 0) == std::chrono::milliseconds(500));
  CHECK(retry_backoff(policy, 1) == std::chrono::milliseconds(1000));
  CHECK(retry_backoff(policy, 2) == std::chrono::milliseconds(2000));
  CHECK(retry_backoff(policy, -1) == std::chrono::milliseconds(500));
}

TEST_CASE("wire json shape") {
  ChatRequest request = simple_request("hi");
  request.messages.push_back(msg(Role::assistant, "calling"));
  Message tool = msg(Role::tool, "Observation:\nresult");
  tool.tool_name = "use_code";
  request.messages.push_back(tool);
  request.sampling.temperature = 0.7;
  request.sampling.top_p = 0.8;
  request.sampling.top_k = 20;
  request.max_tokens = 777;

  SUBCASE("tool messages travel as user role") {
    const auto body = nlohmann::json::parse(chat_request_to_wire_json(request));
    CHECK(body.at("model") == "test-model");
    REQUIRE(body.at("messages").size() == 4);
    CHECK(body.at("messages")[0].at("role") == "system");
    CHECK(body.at("messages")[1].at("role") == "user");
    CHECK(body.at("messages")[2].at("role") == "assistant");
    CHECK(body.at("messages")[3].at("role") == "user");
    CHECK(body.at("messages")[3].at("content") == "Observation:\nresult");
    CHECK(body.at("temperature") == 0.7);
    CHECK(body.at("top_p") == 0.8);
    CHECK(body.at("max_tokens") == 777);
  }

  SUBCASE("top_k only ships when opted in") {
    auto body = nlohmann::json::parse(chat_request_to_wire_json(request));
    CHECK_FALSE(body.contains("top_k"));
    request.send_top_k = true;
    body = nlohmann::json::parse(chat_request_to_wire_json(request));
    CHECK(body.at("top_k") == 20);
    request.sampling.top_k = std::nullopt;
    body = nlohmann::json::parse(chat_request_to_wire_json(request));
    CHECK_FALSE(body.contains("top_k"));
  }

  SUBCASE("seed and stop are optional") {
    auto body = nlohmann::json::parse(chat_request_to_wire_json(request));
    CHECK_FALSE(body.contains("seed"));
    CHECK_FALSE(body.contains("stop"));
    request.sampling.seed = 1234;
    request.stop = {"ANSWER:"};
    body = nlohmann::json::parse(chat_request_to_wire_json(request));
    CHECK(body.at("seed") == 1234);
    CHECK(body.at("stop") == nlohmann::json::array({"ANSWER:"}));
  }
}

TEST_CASE("model-family sampling defaults") {
  SamplingParams qwen = default_sampling("Qwen2.5-32B-Instruct");
  CHECK(qwen.temperature == 0.7);
  CHECK(qwen.top_p == 0.8);
  CHECK(qwen.top_k == std::optional<int>(20));

  SamplingParams llama = default_sampling("meta-llama/Llama-3.3-70B");
  CHECK(llama.temperature == 0.6);
  CHECK(llama.top_p == 0.9);
  CHECK_FALSE(llama.top_k.has_value());

  SamplingParams other = default_sampling("gpt-4.1");
  CHECK(other.temperature == 0.7);
  CHECK(other.top_p == 0.95);
  CHECK_FALSE(other.top_k.has_value());
}

TEST_CASE("http gateway: success on the first attempt") {
  StubServer stub;
  std::atomic<int> hits{0};
  std::string seen_auth;
  std::string seen_body;
  stub.server.Post("/v1/chat/completions",
                   [&](const httplib::Request& req, httplib::Response& res) {
                     ++hits;
                     seen_auth = req.get_header_value("Authorization");
                     seen_body = req.body;
                     res.set_content(ok_body("pong"), "application/json");
                   });
  stub.start();

  HttpGateway gateway(fast_options(stub.url(), "secret-key"));
  ChatResponse response = gateway.complete(simple_request("ping"));
  CHECK(response.content == "pong");
  CHECK(response.attempts == 1);
  CHECK(response.prompt_tokens == std::optional<std::int64_t>(12));
  CHECK(response.completion_tokens == std::optional<std::int64_t>(34));
  CHECK(hits == 1);
  CHECK(seen_auth == "Bearer secret-key");
  const auto body = nlohmann::json::parse(seen_body);
  CHECK(body.at("messages")[1].at("content") == "ping");
}

TEST_CASE("http gateway: 429s are retried until success") {
  StubServer stub;
  std::atomic<int> hits{0};
  stub.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                     const int n = ++hits;
                     if (n < 3) {
                       res.status = n == 1 ? 429 : 503;
                       return;
                     }
                     res.set_content(ok_body("finally"), "application/json");
                   });
  stub.start();

  HttpGateway gateway(fast_options(stub.url()));
  ChatResponse response = gateway.complete(simple_request());
  CHECK(response.content == "finally");
  CHECK(response.attempts == 3);
  CHECK(hits == 3);
}

TEST_CASE("http gateway: persistent 500 exhausts the retry budget") {
  StubServer stub;
  std::atomic<int> hits{0};
  stub.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                     ++hits;
                     res.status = 500;
                   });
  stub.start();

  HttpGateway gateway(fast_options(stub.url()));
  try {
    gateway.complete(simple_request());
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.kind == GatewayError::Kind::transport);
    CHECK(e.attempts == 3);
    CHECK(std::string(e.what()).find("gave up after 3 attempts") !=
          std::string::npos);
    CHECK(std::string(e.what()).find("HTTP 500") != std::string::npos);
  }
  CHECK(hits == 3);
}

TEST_CASE("http gateway: auth failures never retry") {
  StubServer stub;
  std::atomic<int> hits{0};
  stub.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                     ++hits;
                     res.status = 401;
                   });
  stub.start();

  HttpGateway gateway(fast_options(stub.url(), "bad-key"));
  try {
    gateway.complete(simple_request());
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.kind == GatewayError::Kind::auth);
    CHECK(e.attempts == 1);
  }
  CHECK(hits == 1);
}

TEST_CASE("http gateway: malformed success bodies are not retried") {
  StubServer stub;
  std::atomic<int> hits{0};
  stub.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                     ++hits;
                     res.set_content("this is not json", "text/plain");
                   });
  stub.start();

  HttpGateway gateway(fast_options(stub.url()));
  try {
    gateway.complete(simple_request());
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.kind == GatewayError::Kind::malformed);
  }
  CHECK(hits == 1);
}

TEST_CASE("http gateway: schema violations name the problem") {
  StubServer stub;
  stub.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                     res.set_content(R"({"choices": []})", "application/json");
                   });
  stub.start();

  HttpGateway gateway(fast_options(stub.url()));
  try {
    gateway.complete(simple_request());
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.kind == GatewayError::Kind::malformed);
    CHECK(std::string(e.what()).find("response schema") != std::string::npos);
  }
}

TEST_CASE("http gateway: unexpected 4xx is malformed, not retried") {
  StubServer stub;
  std::atomic<int> hits{0};
  stub.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                     ++hits;
                     res.status = 404;
                     res.set_content("nope", "text/plain");
                   });
  stub.start();

  HttpGateway gateway(fast_options(stub.url()));
  try {
    gateway.complete(simple_request());
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.kind == GatewayError::Kind::malformed);
    CHECK(std::string(e.what()).find("HTTP 404") != std::string::npos);
  }
  CHECK(hits == 1);
}

TEST_CASE("http gateway: base URL path prefixes are preserved") {
  StubServer stub;
  std::atomic<int> hits{0};
  stub.server.Post("/proxy/llm/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                     ++hits;
                     res.set_content(ok_body("routed"), "application/json");
                   });
  stub.start();

  HttpGateway gateway(fast_options(stub.url("/proxy/llm/")));
  CHECK(gateway.complete(simple_request()).content == "routed");
  CHECK(hits == 1);
}

TEST_CASE("http gateway: finish_reason length maps through") {
  StubServer stub;
  stub.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                     nlohmann::json body{
                         {"choices",
                          {{{"message", {{"content", "truncated"}}},
                            {"finish_reason", "length"}}}},
                     };
                     res.set_content(body.dump(), "application/json");
                   });
  stub.start();

  HttpGateway gateway(fast_options(stub.url()));
  ChatResponse response = gateway.complete(simple_request());
  CHECK(response.finish_reason == FinishReason::length);
  CHECK_FALSE(response.prompt_tokens.has_value());
  CHECK_FALSE(response.completion_tokens.has_value());
}

TEST_CASE("http gateway: connection refused counts as transport") {
  // Nothing listens on this port (bind then close to reserve a dead one).
  HttpGateway gateway(fast_options("http://127.0.0.1:1"));
  try {
    gateway.complete(simple_request());
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(e.kind == GatewayError::Kind::transport);
    CHECK(e.attempts == 3);
  }
}

TEST_CASE("http gateway: bad base URLs are configuration errors") {
  CHECK_THROWS_AS(HttpGateway(fast_options("localhost:8000")), ConfigError);
  CHECK_THROWS_AS(HttpGateway(fast_options("ftp://host")), ConfigError);
  CHECK_THROWS_AS(HttpGateway(fast_options("http://")), ConfigError);
  CHECK_THROWS_AS(HttpGateway(fast_options("")), ConfigError);
}
