#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cogtools/message.hpp"
#include "cogtools/run_config.hpp"

namespace cogtools {

struct ChatRequest {
  std::string model;
  std::vector<Message> messages;
  SamplingParams sampling;
  int max_tokens = 4096;
  std::vector<std::string> stop;
  // Off unless the operator opted in; many OpenAI-compatible servers reject
  // unknown sampling fields.
  bool send_top_k = false;
};

enum class FinishReason { stop, length, error };

std::string_view to_string(FinishReason reason);

struct ChatResponse {
  std::string content;
  FinishReason finish_reason = FinishReason::stop;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
  // How many HTTP attempts the call took (1 when the first try succeeded;
  // always 1 for scripted backends).
  int attempts = 1;
};

class LlmGateway {
 public:
  virtual ~LlmGateway() = default;
  // Throws GatewayError on failure; never retries auth or schema errors.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// One scripted exchange: the matcher is a predicate over the request's last
// message. An empty expect_contains matches anything.
struct ScriptStep {
  std::string expect_contains;
  std::optional<Role> expect_role;
  std::string reply;
};

// Deterministic replay backend for tests and fixtures. Steps are consumed
// strictly in order; a matcher failure or running out of steps throws (a
// mismatch is a test failure, not something to paper over). One instance
// serves one episode.
class ScriptedBackend final : public LlmGateway {
 public:
  explicit ScriptedBackend(std::vector<ScriptStep> steps);

  ChatResponse complete(const ChatRequest& request) override;

  std::size_t consumed() const { return next_; }
  std::size_t remaining() const { return steps_.size() - next_; }

 private:
  std::vector<ScriptStep> steps_;
  std::size_t next_ = 0;
};

// A script fixture file: either a single script ({"steps": [...]}) reused for
// every episode, or a per-question map ({"scripts": {id: {...}}, "default":
// {...}}). Each episode gets a fresh cursor.
class ScriptLibrary {
 public:
  static ScriptLibrary from_file(const std::filesystem::path& path);
  static ScriptLibrary from_json_text(const std::string& text);

  std::unique_ptr<ScriptedBackend> open(const std::string& question_id) const;

 private:
  std::vector<ScriptStep> default_steps_;
  bool has_default_ = false;
  std::map<std::string, std::vector<ScriptStep>> per_question_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
};

// Exponential backoff: base_delay << attempt (0-based), i.e. 0.5s, 1s, 2s at
// the defaults.
std::chrono::milliseconds retry_backoff(const RetryPolicy& policy, int attempt);

struct HttpGatewayOptions {
  std::string base_url;  // e.g. http://localhost:8000; the path /v1/chat/completions is appended
  std::string api_key;
  RetryPolicy retry;
  int max_in_flight = 8;
  std::chrono::seconds request_timeout{120};
};

// OpenAI-compatible chat completions client. Thread-safe; concurrent calls
// are bounded by max_in_flight.
class HttpGateway final : public LlmGateway {
 public:
  explicit HttpGateway(HttpGatewayOptions options);
  ~HttpGateway() override;

  ChatResponse complete(const ChatRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Builds the request body for the wire. Exposed for tests: transcript tool
// messages travel as role "user" (their content already carries the
// Observation prefix), since plain chat-completions servers reject bare tool
// turns.
std::string chat_request_to_wire_json(const ChatRequest& request);

// Model-family defaults: qwen -> 0.7/0.8/top-k 20, llama -> 0.6/0.9,
// anything else -> 0.7/0.95.
SamplingParams default_sampling(std::string_view model_id);

}  // namespace cogtools
