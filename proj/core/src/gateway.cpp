#include "cogtools/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cogtools/errors.hpp"

namespace cogtools {

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "stop";
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptStep> steps)
    : steps_(std::move(steps)) {}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  if (next_ >= steps_.size()) {
    throw GatewayError(GatewayError::Kind::script_exhausted,
                       "scripted backend ran out of steps after " +
                           std::to_string(steps_.size()) + " calls");
  }
  const ScriptStep& step = steps_[next_];
  if (request.messages.empty()) {
    throw GatewayError(GatewayError::Kind::script_mismatch,
                       "scripted backend got an empty request");
  }
  const Message& last = request.messages.back();
  if (step.expect_role && last.role != *step.expect_role) {
    throw GatewayError(
        GatewayError::Kind::script_mismatch,
        "script step " + std::to_string(next_) + " expected role " +
            std::string(to_string(*step.expect_role)) + ", got " +
            std::string(to_string(last.role)));
  }
  if (!step.expect_contains.empty() &&
      last.content.find(step.expect_contains) == std::string::npos) {
    throw GatewayError(GatewayError::Kind::script_mismatch,
                       "script step " + std::to_string(next_) +
                           " expected the last message to contain \"" +
                           step.expect_contains + "\"");
  }
  ++next_;
  ChatResponse response;
  response.content = step.reply;
  response.finish_reason = FinishReason::stop;
  response.attempts = 1;
  return response;
}

namespace {

std::vector<ScriptStep> steps_from_json(const nlohmann::json& value) {
  if (!value.is_object() || !value.contains("steps") ||
      !value.at("steps").is_array()) {
    throw ConfigError("script fixture: expected an object with a \"steps\" array");
  }
  std::vector<ScriptStep> steps;
  for (const auto& item : value.at("steps")) {
    ScriptStep step;
    step.expect_contains = item.value("expect_contains", std::string{});
    if (item.contains("expect_role")) {
      const auto text = item.at("expect_role").get<std::string>();
      const auto role = role_from_string(text);
      if (!role) throw ConfigError("script fixture: unknown role " + text);
      step.expect_role = *role;
    }
    if (item.contains("reply_lines")) {
      std::string reply;
      bool first = true;
      for (const auto& line : item.at("reply_lines")) {
        if (!first) reply += '\n';
        reply += line.get<std::string>();
        first = false;
      }
      step.reply = std::move(reply);
    } else {
      step.reply = item.value("reply", std::string{});
    }
    steps.push_back(std::move(step));
  }
  return steps;
}

}  // namespace

ScriptLibrary ScriptLibrary::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open script fixture: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

ScriptLibrary ScriptLibrary::from_json_text(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string{"script fixture is not valid JSON: "} + e.what());
  }
  ScriptLibrary library;
  if (root.contains("scripts")) {
    for (const auto& [id, value] : root.at("scripts").items()) {
      library.per_question_[id] = steps_from_json(value);
    }
    if (root.contains("default")) {
      library.default_steps_ = steps_from_json(root.at("default"));
      library.has_default_ = true;
    }
    return library;
  }
  library.default_steps_ = steps_from_json(root);
  library.has_default_ = true;
  return library;
}

std::unique_ptr<ScriptedBackend> ScriptLibrary::open(
    const std::string& question_id) const {
  const auto it = per_question_.find(question_id);
  if (it != per_question_.end()) {
    return std::make_unique<ScriptedBackend>(it->second);
  }
  if (has_default_) {
    return std::make_unique<ScriptedBackend>(default_steps_);
  }
  throw ConfigError("script fixture has no script for question \"" +
                    question_id + "\" and no default");
}

std::chrono::milliseconds retry_backoff(const RetryPolicy& policy, int attempt) {
  if (attempt < 0) attempt = 0;
  return policy.base_delay * (1LL << attempt);
}

std::string chat_request_to_wire_json(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const Message& message : request.messages) {
    const std::string role = message.role == Role::tool
                                 ? "user"
                                 : std::string(to_string(message.role));
    messages.push_back({{"role", role}, {"content", message.content}});
  }
  nlohmann::json body{
      {"model", request.model},
      {"messages", std::move(messages)},
      {"temperature", request.sampling.temperature},
      {"top_p", request.sampling.top_p},
      {"max_tokens", request.max_tokens},
  };
  if (request.send_top_k && request.sampling.top_k) {
    body["top_k"] = *request.sampling.top_k;
  }
  if (request.sampling.seed) body["seed"] = *request.sampling.seed;
  if (!request.stop.empty()) body["stop"] = request.stop;
  return body.dump();
}

SamplingParams default_sampling(std::string_view model_id) {
  std::string lower(model_id);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  SamplingParams params;
  if (lower.find("qwen") != std::string::npos) {
    params.temperature = 0.7;
    params.top_p = 0.8;
    params.top_k = 20;
    return params;
  }
  if (lower.find("llama") != std::string::npos) {
    params.temperature = 0.6;
    params.top_p = 0.9;
    return params;
  }
  params.temperature = 0.7;
  params.top_p = 0.95;
  return params;
}

}  // namespace cogtools
