#include "cogtools/cognitive_tools.hpp"

#include <map>

#include "cogtools/errors.hpp"
#include "cogtools/output_parser.hpp"

namespace cogtools {

namespace {

std::string strip_trailing_ws(std::string text) {
  while (!text.empty() &&
         (text.back() == '\n' || text.back() == '\r' || text.back() == ' ' ||
          text.back() == '\t')) {
    text.pop_back();
  }
  return text;
}

void account_usage(EpisodeBuilder& events, const ChatRequest& request,
                   const ChatResponse& response) {
  if (response.prompt_tokens) {
    events.add_prompt_tokens(*response.prompt_tokens);
  } else {
    std::int64_t estimate = 0;
    for (const Message& message : request.messages) {
      estimate += estimate_tokens(message.content);
    }
    events.add_prompt_tokens(estimate);
  }
  if (response.completion_tokens) {
    events.add_completion_tokens(*response.completion_tokens);
  } else {
    events.add_completion_tokens(estimate_tokens(response.content));
  }
}

ChatResponse sub_complete(ToolDeps& deps, ToolName tool,
                          const std::vector<Message>& messages) {
  ChatRequest request;
  request.model = deps.model;
  request.messages = messages;
  request.sampling = deps.sampling;
  request.max_tokens = deps.per_call_token_limit;
  request.send_top_k = deps.send_top_k;
  deps.events.record(EventKind::llm_request,
                     {{"purpose", "tool"},
                      {"tool", to_string(tool)},
                      {"message_count", messages.size()},
                      {"model", request.model},
                      {"max_tokens", request.max_tokens}});
  const ChatResponse response = deps.gateway.complete(request);
  nlohmann::json payload{{"purpose", "tool"},
                         {"tool", to_string(tool)},
                         {"content", response.content},
                         {"finish_reason", to_string(response.finish_reason)},
                         {"attempts", response.attempts}};
  if (response.prompt_tokens) payload["prompt_tokens"] = *response.prompt_tokens;
  if (response.completion_tokens) {
    payload["completion_tokens"] = *response.completion_tokens;
  }
  deps.events.record(EventKind::llm_response, std::move(payload));
  account_usage(deps.events, request, response);
  return response;
}

// The last tool observation (without the Observation prefix), else the last
// assistant message other than the newest one.
std::optional<std::string> derive_proposed_answer(const Transcript& transcript) {
  for (auto it = transcript.messages.rbegin(); it != transcript.messages.rend();
       ++it) {
    if (it->role != Role::tool) continue;
    std::string_view content = it->content;
    constexpr std::string_view kPrefix = "Observation:\n";
    if (content.substr(0, kPrefix.size()) == kPrefix) {
      content.remove_prefix(kPrefix.size());
    }
    return std::string(content);
  }
  bool newest_assistant_skipped = false;
  for (auto it = transcript.messages.rbegin(); it != transcript.messages.rend();
       ++it) {
    if (it->role != Role::assistant) continue;
    if (!newest_assistant_skipped) {
      newest_assistant_skipped = true;
      continue;
    }
    return std::string(it->content);
  }
  return std::nullopt;
}

std::string render_user_message(ToolName tool,
                                const std::map<std::string, std::string>& values) {
  switch (tool) {
    case ToolName::understand_question:
    case ToolName::recall_related:
      return values.at("question");
    case ToolName::examine_answer:
      return "Question: " + values.at("question") + "\n\nCurrent reasoning:\n" +
             values.at("current_trace") + "\n\nProposed answer: " +
             values.at("proposed_answer");
    case ToolName::backtracking:
      return "Question: " + values.at("question") + "\n\nReasoning trace:\n" +
             values.at("current_trace");
    case ToolName::use_code:
      return "Question: " + values.at("question") + "\n\nReasoning so far:\n" +
             values.at("current_trace");
  }
  return values.at("question");
}

ToolOutcome run_use_code(ToolDeps& deps, std::vector<Message> messages,
                         ToolOutcome outcome) {
  ChatResponse response = sub_complete(deps, ToolName::use_code, messages);
  const int max_attempts = deps.max_code_retries + 1;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::optional<std::string> code;
    try {
      code = extract_code_block(response.content);
    } catch (const UnterminatedFenceError&) {
      code = std::nullopt;
    }
    if (!code) {
      if (attempt + 1 >= max_attempts) {
        throw ToolError("use_code reply carried no fenced code block");
      }
      messages.push_back({Role::assistant, response.content, std::nullopt});
      messages.push_back(
          {Role::user,
           "Your previous reply did not include a fenced code block. Reply in "
           "the same format, with your reasoning after \"Thought:\" and a "
           "complete ```python code block after \"Code:\".",
           std::nullopt});
      response = sub_complete(deps, ToolName::use_code, messages);
      continue;
    }
    const ExecutionResult result = deps.executor.execute(*code);
    nlohmann::json payload{
        {"attempt", attempt},
        {"exit_status", result.status == ExecutionResult::Status::ok ? "ok"
                        : result.status == ExecutionResult::Status::timeout
                            ? "timeout"
                        : result.status == ExecutionResult::Status::spawn_failure
                            ? "spawn_failure"
                            : "nonzero"},
        {"exit_code", result.exit_code},
        {"stdout", result.stdout_text},
        {"stderr", result.stderr_text},
        {"stdout_truncated", result.stdout_truncated},
        {"stderr_truncated", result.stderr_truncated},
    };
    deps.events.record(EventKind::code_execution, std::move(payload));
    if (result.ok()) {
      outcome.observation =
          format_code_observation(*code, strip_trailing_ws(result.stdout_text));
      return outcome;
    }
    if (attempt + 1 >= max_attempts) {
      std::string failure = result.failure_text();
      if (!result.stdout_text.empty()) {
        failure = strip_trailing_ws(result.stdout_text) + "\n" + failure;
      }
      outcome.observation = format_code_observation(*code, failure);
      return outcome;
    }
    messages.push_back({Role::assistant, response.content, std::nullopt});
    messages.push_back(
        {Role::user,
         "The code failed.\n\nPrevious code:\n```python\n" + *code +
             "\n```\n\nError:\n" + result.failure_text() +
             "\n\nFix the code and reply in the same format, with your "
             "reasoning after \"Thought:\" and a complete ```python code "
             "block after \"Code:\".",
         std::nullopt});
    response = sub_complete(deps, ToolName::use_code, messages);
  }
  throw ToolError("use_code retries exhausted");  // unreachable
}

}  // namespace

const ToolSpec& tool_spec(ToolName name) {
  static const std::vector<ToolSpec> specs = [] {
    std::vector<ToolSpec> table;
    table.push_back(
        {ToolName::understand_question,
         TemplateId::understand_question,
         {{"question", InputSource::question, true}},
         "break the question down into its goal, known data, and a candidate "
         "solution strategy"});
    table.push_back(
        {ToolName::recall_related,
         TemplateId::recall_related,
         {{"question", InputSource::question, true}},
         "recall solved problems analogous to the current one to guide the "
         "solution"});
    table.push_back(
        {ToolName::examine_answer,
         TemplateId::examine_answer,
         {{"question", InputSource::question, true},
          {"current_trace", InputSource::current_trace, true},
          {"proposed_answer", InputSource::proposed_answer, true}},
         "critically examine the current reasoning trace and proposed answer "
         "for errors"});
    table.push_back(
        {ToolName::backtracking,
         TemplateId::backtracking,
         {{"question", InputSource::question, true},
          {"current_trace", InputSource::current_trace, true}},
         "locate the last correct step in the reasoning trace and propose a "
         "revised strategy from it"});
    table.push_back(
        {ToolName::use_code,
         TemplateId::use_code,
         {{"question", InputSource::question, true},
          {"current_trace", InputSource::current_trace, true}},
         "write and execute Python code for the computation and return its "
         "output"});
    return table;
  }();
  for (const ToolSpec& spec : specs) {
    if (spec.name == name) return spec;
  }
  return specs.front();
}

std::string render_trace(const Transcript& transcript, std::size_t limit) {
  std::vector<const std::string*> parts;
  for (const Message& message : transcript.messages) {
    if (message.role == Role::assistant || message.role == Role::tool) {
      if (!message.content.empty()) parts.push_back(&message.content);
    }
  }
  if (parts.empty()) return "";

  std::size_t first = parts.size();
  std::size_t total = 0;
  while (first > 0) {
    const std::size_t candidate = parts[first - 1]->size() + (total ? 2 : 0);
    if (total + candidate > limit) break;
    total += candidate;
    --first;
  }
  if (first == parts.size()) {
    // Even the newest message alone exceeds the limit: keep its tail.
    const std::string& newest = *parts.back();
    return newest.substr(newest.size() - limit);
  }
  std::string out;
  out.reserve(total);
  for (std::size_t i = first; i < parts.size(); ++i) {
    if (!out.empty()) out += "\n\n";
    out += *parts[i];
  }
  return out;
}

ToolOutcome invoke(const ToolInvocation& invocation, const std::string& question,
                   const Transcript& transcript, ToolDeps& deps) {
  const ToolSpec& spec = tool_spec(invocation.tool_name);
  std::map<std::string, std::string> values;
  std::set<std::string> consumed;

  for (const ToolInput& input : spec.inputs) {
    const auto direct = invocation.arguments.find(input.name);
    if (direct != invocation.arguments.end()) {
      values[input.name] = direct->second;
      consumed.insert(input.name);
      continue;
    }
    if (input.source == InputSource::proposed_answer) {
      const auto alias = invocation.arguments.find("current_proposed_answer");
      if (alias != invocation.arguments.end()) {
        values[input.name] = alias->second;
        consumed.insert("current_proposed_answer");
        continue;
      }
    }
    switch (input.source) {
      case InputSource::question:
        values[input.name] = question;
        break;
      case InputSource::current_trace: {
        const std::string trace = render_trace(transcript);
        if (trace.empty()) {
          throw ToolInputError(input.name,
                               "no reasoning trace is available yet for " +
                                   std::string(to_string(invocation.tool_name)));
        }
        values[input.name] = trace;
        break;
      }
      case InputSource::proposed_answer: {
        const auto derived = derive_proposed_answer(transcript);
        if (!derived) {
          throw ToolInputError(input.name,
                               "no proposed answer is available yet for " +
                                   std::string(to_string(invocation.tool_name)));
        }
        values[input.name] = *derived;
        break;
      }
      case InputSource::caller_arguments:
        if (input.required) {
          throw ToolInputError(input.name,
                               "missing required argument \"" + input.name +
                                   "\" for " +
                                   std::string(to_string(invocation.tool_name)));
        }
        break;
    }
  }

  ToolOutcome outcome;
  for (const auto& [key, value] : invocation.arguments) {
    if (!consumed.count(key)) outcome.ignored_arguments.push_back(key);
  }

  std::vector<Message> messages{
      {Role::system, deps.catalog.render(spec.prompt, {}), std::nullopt},
      {Role::user, render_user_message(invocation.tool_name, values), std::nullopt},
  };

  if (invocation.tool_name == ToolName::use_code) {
    return run_use_code(deps, std::move(messages), std::move(outcome));
  }
  const ChatResponse response =
      sub_complete(deps, invocation.tool_name, messages);
  outcome.observation = response.content;
  return outcome;
}

std::string format_code_observation(const std::string& code,
                                    const std::string& output) {
  return "Generated code block:\n" + code + "\n\nExecution Output:\n" + output;
}

}  // namespace cogtools
