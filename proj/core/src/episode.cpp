#include "cogtools/episode.hpp"

#include "cogtools/errors.hpp"
#include "cogtools/tool_names.hpp"

namespace cogtools {

namespace {

nlohmann::json sampling_to_json(const SamplingParams& s) {
  nlohmann::json out{{"temperature", s.temperature}, {"top_p", s.top_p}};
  if (s.top_k) out["top_k"] = *s.top_k;
  if (s.seed) out["seed"] = *s.seed;
  return out;
}

SamplingParams sampling_from_json(const nlohmann::json& value) {
  SamplingParams s;
  if (value.contains("temperature")) s.temperature = value.at("temperature").get<double>();
  if (value.contains("top_p")) s.top_p = value.at("top_p").get<double>();
  if (value.contains("top_k")) s.top_k = value.at("top_k").get<int>();
  if (value.contains("seed")) s.seed = value.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::llm_request: return "llm_request";
    case EventKind::llm_response: return "llm_response";
    case EventKind::tool_call: return "tool_call";
    case EventKind::tool_result: return "tool_result";
    case EventKind::code_execution: return "code_execution";
    case EventKind::parse_failure: return "parse_failure";
    case EventKind::answer: return "answer";
  }
  return "llm_request";
}

std::optional<EventKind> event_kind_from_string(std::string_view text) {
  if (text == "llm_request") return EventKind::llm_request;
  if (text == "llm_response") return EventKind::llm_response;
  if (text == "tool_call") return EventKind::tool_call;
  if (text == "tool_result") return EventKind::tool_result;
  if (text == "code_execution") return EventKind::code_execution;
  if (text == "parse_failure") return EventKind::parse_failure;
  if (text == "answer") return EventKind::answer;
  return std::nullopt;
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::answered: return "answered";
    case Outcome::step_budget_exhausted: return "step_budget_exhausted";
    case Outcome::gateway_error: return "gateway_error";
    case Outcome::aborted: return "aborted";
  }
  return "aborted";
}

std::optional<Outcome> outcome_from_string(std::string_view text) {
  if (text == "answered") return Outcome::answered;
  if (text == "step_budget_exhausted") return Outcome::step_budget_exhausted;
  if (text == "gateway_error") return Outcome::gateway_error;
  if (text == "aborted") return Outcome::aborted;
  return std::nullopt;
}

std::vector<std::string> validate_episode(const Episode& episode) {
  std::vector<std::string> violations;
  for (std::size_t i = 0; i < episode.events.size(); ++i) {
    if (episode.events[i].seq != static_cast<int>(i)) {
      violations.push_back("event " + std::to_string(i) +
                           ": seq must be contiguous from 0");
      break;
    }
  }
  const bool answered = episode.outcome == Outcome::answered;
  if (answered && !episode.final_answer) {
    violations.push_back("outcome=answered requires final_answer");
  }
  if (!answered && episode.final_answer) {
    violations.push_back("final_answer only allowed when outcome=answered");
  }
  if (episode.token_usage.prompt_tokens < 0 ||
      episode.token_usage.completion_tokens < 0) {
    violations.push_back("token_usage must be non-negative");
  }
  if (episode.repetition < 0) {
    violations.push_back("repetition must be non-negative");
  }
  return violations;
}

nlohmann::json run_config_to_json(const RunConfig& config) {
  nlohmann::json out{
      {"strategy", to_string(config.strategy)},
      {"motivational_cues", config.motivational_cues},
      {"sampling", sampling_to_json(config.sampling)},
      {"max_steps", config.max_steps},
      {"max_code_retries", config.max_code_retries},
      {"per_call_token_limit", config.per_call_token_limit},
  };
  if (config.single_tool) out["single_tool"] = to_string(*config.single_tool);
  return out;
}

RunConfig run_config_from_json(const nlohmann::json& value) {
  RunConfig config;
  if (value.contains("strategy")) {
    const auto text = value.at("strategy").get<std::string>();
    const auto strategy = strategy_from_string(text);
    if (!strategy) throw ParseError("unknown strategy: " + text);
    config.strategy = *strategy;
  }
  if (value.contains("single_tool")) {
    const auto text = value.at("single_tool").get<std::string>();
    const auto tool = tool_name_from_string(text);
    if (!tool) throw ParseError("unknown tool name: " + text);
    config.single_tool = *tool;
  }
  if (value.contains("motivational_cues")) {
    config.motivational_cues = value.at("motivational_cues").get<bool>();
  }
  if (value.contains("sampling")) {
    config.sampling = sampling_from_json(value.at("sampling"));
  }
  if (value.contains("max_steps")) config.max_steps = value.at("max_steps").get<int>();
  if (value.contains("max_code_retries")) {
    config.max_code_retries = value.at("max_code_retries").get<int>();
  }
  if (value.contains("per_call_token_limit")) {
    config.per_call_token_limit = value.at("per_call_token_limit").get<int>();
  }
  return config;
}

nlohmann::json to_json(const Episode& episode) {
  nlohmann::json events = nlohmann::json::array();
  for (const TraceEvent& event : episode.events) {
    events.push_back({{"seq", event.seq},
                      {"kind", to_string(event.kind)},
                      {"payload", event.payload}});
  }
  nlohmann::json out{
      {"record", "episode"},
      {"question_id", episode.question_id},
      {"repetition", episode.repetition},
      {"run_config", run_config_to_json(episode.run_config)},
      {"events", std::move(events)},
      {"outcome", to_string(episode.outcome)},
      {"token_usage",
       {{"prompt_tokens", episode.token_usage.prompt_tokens},
        {"completion_tokens", episode.token_usage.completion_tokens}}},
  };
  if (episode.final_answer) {
    out["final_answer"] = {{"raw", episode.final_answer->raw},
                           {"normalized", episode.final_answer->normalized}};
  }
  return out;
}

Episode episode_from_json(const nlohmann::json& record) {
  if (!record.is_object()) throw ParseError("episode record must be an object");
  Episode episode;
  episode.question_id = record.value("question_id", std::string{});
  episode.repetition = record.value("repetition", 0);
  if (record.contains("run_config")) {
    episode.run_config = run_config_from_json(record.at("run_config"));
  }
  if (record.contains("events")) {
    for (const auto& item : record.at("events")) {
      TraceEvent event;
      event.seq = item.value("seq", 0);
      const auto kind_text = item.value("kind", std::string{});
      const auto kind = event_kind_from_string(kind_text);
      if (!kind) throw ParseError("unknown event kind: " + kind_text);
      event.kind = *kind;
      if (item.contains("payload")) event.payload = item.at("payload");
      episode.events.push_back(std::move(event));
    }
  }
  if (record.contains("final_answer")) {
    const auto& fa = record.at("final_answer");
    episode.final_answer = FinalAnswer{fa.value("raw", std::string{}),
                                       fa.value("normalized", std::string{})};
  }
  const auto outcome_text = record.value("outcome", std::string{"aborted"});
  const auto outcome = outcome_from_string(outcome_text);
  if (!outcome) throw ParseError("unknown outcome: " + outcome_text);
  episode.outcome = *outcome;
  if (record.contains("token_usage")) {
    const auto& usage = record.at("token_usage");
    episode.token_usage.prompt_tokens = usage.value("prompt_tokens", std::int64_t{0});
    episode.token_usage.completion_tokens =
        usage.value("completion_tokens", std::int64_t{0});
  }
  return episode;
}

std::string to_jsonl(const Episode& episode) {
  return to_json(episode).dump(-1, ' ', false,
                               nlohmann::json::error_handler_t::replace);
}

Episode episode_from_jsonl(const std::string& line) {
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string{"bad episode line: "} + e.what());
  }
  return episode_from_json(record);
}

const TraceEvent& EpisodeBuilder::record(EventKind kind, nlohmann::json payload) {
  TraceEvent event;
  event.seq = static_cast<int>(events_.size());
  event.kind = kind;
  event.payload = std::move(payload);
  events_.push_back(std::move(event));
  if (live_) live_(events_.back());
  return events_.back();
}

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

}  // namespace cogtools
