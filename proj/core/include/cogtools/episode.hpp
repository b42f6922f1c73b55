#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cogtools/invocation.hpp"
#include "cogtools/run_config.hpp"

namespace cogtools {

enum class EventKind {
  llm_request,
  llm_response,
  tool_call,
  tool_result,
  code_execution,
  parse_failure,
  answer,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(std::string_view text);

struct TraceEvent {
  int seq = 0;  // contiguous from 0 within an episode
  EventKind kind = EventKind::llm_request;
  nlohmann::json payload;

  bool operator==(const TraceEvent&) const = default;
};

enum class Outcome {
  answered,
  step_budget_exhausted,
  gateway_error,
  aborted,
};

std::string_view to_string(Outcome outcome);
std::optional<Outcome> outcome_from_string(std::string_view text);

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;

  bool operator==(const TokenUsage&) const = default;
};

struct Episode {
  std::string question_id;
  int repetition = 0;  // harness bookkeeping for resumable sweeps
  RunConfig run_config;
  std::vector<TraceEvent> events;
  // Present iff outcome == answered.
  std::optional<FinalAnswer> final_answer;
  Outcome outcome = Outcome::aborted;
  TokenUsage token_usage;

  bool operator==(const Episode&) const = default;
};

// Empty iff the episode invariants hold (seq contiguity, outcome/answer
// coupling).
std::vector<std::string> validate_episode(const Episode& episode);

nlohmann::json to_json(const Episode& episode);
Episode episode_from_json(const nlohmann::json& record);

// One self-describing record per line; the line carries no trailing newline.
std::string to_jsonl(const Episode& episode);
Episode episode_from_jsonl(const std::string& line);

nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& value);

// Collects events for one episode, assigning contiguous sequence numbers.
// An optional live sink sees each event as it is recorded (used by the CLI
// to stream progress to stderr).
class EpisodeBuilder {
 public:
  using LiveSink = std::function<void(const TraceEvent&)>;

  explicit EpisodeBuilder(LiveSink live = nullptr) : live_(std::move(live)) {}

  const TraceEvent& record(EventKind kind, nlohmann::json payload);
  void add_prompt_tokens(std::int64_t n) { usage_.prompt_tokens += n; }
  void add_completion_tokens(std::int64_t n) { usage_.completion_tokens += n; }

  const std::vector<TraceEvent>& events() const { return events_; }
  std::vector<TraceEvent> take_events() { return std::move(events_); }
  const TokenUsage& usage() const { return usage_; }

 private:
  std::vector<TraceEvent> events_;
  TokenUsage usage_;
  LiveSink live_;
};

// Character-count/4 estimate (rounded up) used when a backend reports no
// token usage.
std::int64_t estimate_tokens(std::string_view text);

}  // namespace cogtools
