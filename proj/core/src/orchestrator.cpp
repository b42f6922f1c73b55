#include "cogtools/orchestrator.hpp"

#include "cogtools/errors.hpp"
#include "cogtools/output_parser.hpp"

namespace cogtools {

namespace {

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

std::vector<ToolName> ordered_tools(const std::set<ToolName>& registry) {
  std::vector<ToolName> ordered;
  for (const ToolName tool : all_tools()) {
    if (registry.count(tool)) ordered.push_back(tool);
  }
  return ordered;
}

}  // namespace

std::set<ToolName> enabled_tools(const RunConfig& config) {
  switch (config.strategy) {
    case Strategy::baseline:
    case Strategy::cot:
    case Strategy::cognitive_prompting:
      return {};
    case Strategy::code_only:
      return {ToolName::use_code};
    case Strategy::cognitive_tools: {
      std::set<ToolName> all;
      for (const ToolName tool : all_tools()) all.insert(tool);
      return all;
    }
    case Strategy::single_tool:
      if (!config.single_tool) {
        throw ConfigError("single_tool strategy requires a tool name");
      }
      return {*config.single_tool};
  }
  return {};
}

Transcript build_initial_transcript(const std::string& question,
                                    const RunConfig& config,
                                    const PromptCatalog& catalog) {
  const auto violations = validate_run_config(config);
  if (!violations.empty()) {
    throw ConfigError("invalid run config: " + violations.front());
  }

  Transcript transcript;
  transcript.question = question;
  switch (config.strategy) {
    case Strategy::baseline:
    case Strategy::cot: {
      std::string user =
          catalog.render(TemplateId::baseline_prefix, {{"question", question}});
      if (config.strategy == Strategy::cot) user += "\nThink step by step.";
      transcript.messages.push_back({Role::system, kDefaultSystemPrompt, std::nullopt});
      transcript.messages.push_back({Role::user, std::move(user), std::nullopt});
      return transcript;
    }
    case Strategy::cognitive_prompting: {
      const std::string user =
          catalog.render(TemplateId::cognitive_prompting, {}) + "\n\n" + question;
      transcript.messages.push_back({Role::system, kDefaultSystemPrompt, std::nullopt});
      transcript.messages.push_back({Role::user, std::move(user), std::nullopt});
      return transcript;
    }
    case Strategy::code_only:
    case Strategy::cognitive_tools:
    case Strategy::single_tool: {
      const std::string signature = PromptCatalog::tool_signature_block(
          ordered_tools(enabled_tools(config)));
      const TemplateId system_template =
          config.motivational_cues ? TemplateId::cognitive_tools_system
                                   : TemplateId::cognitive_tools_system_no_motivation;
      transcript.messages.push_back(
          {Role::system,
           catalog.render(system_template, {{"cognitive_tools_signature", signature}}),
           std::nullopt});
      transcript.messages.push_back({Role::user, question, std::nullopt});
      return transcript;
    }
  }
  throw ConfigError("unknown strategy");
}

Episode run_episode(const EpisodeRequest& request, const OrchestratorDeps& deps,
                    EpisodeBuilder::LiveSink live) {
  EpisodeBuilder events(std::move(live));
  Episode episode;
  episode.question_id = request.question_id;
  episode.repetition = request.repetition;
  episode.run_config = request.config;
  episode.outcome = Outcome::step_budget_exhausted;

  const std::set<ToolName> registry = enabled_tools(request.config);
  Transcript transcript =
      build_initial_transcript(request.question, request.config, deps.catalog);

  ToolDeps tool_deps{deps.gateway,
                     deps.catalog,
                     deps.executor,
                     events,
                     deps.model,
                     request.config.sampling,
                     request.config.per_call_token_limit,
                     request.config.max_code_retries,
                     deps.send_top_k};

  int nudges = 0;
  for (int step = 0; step < request.config.max_steps; ++step) {
    ChatRequest chat;
    chat.model = deps.model;
    chat.messages = transcript.messages;
    chat.sampling = request.config.sampling;
    chat.max_tokens = request.config.per_call_token_limit;
    chat.send_top_k = deps.send_top_k;
    events.record(EventKind::llm_request,
                  {{"purpose", "main"},
                   {"step", step},
                   {"message_count", chat.messages.size()},
                   {"model", chat.model},
                   {"max_tokens", chat.max_tokens}});
    ChatResponse response;
    try {
      response = deps.gateway.complete(chat);
    } catch (const GatewayError& e) {
      events.record(EventKind::llm_response, {{"purpose", "main"},
                                              {"step", step},
                                              {"finish_reason", "error"},
                                              {"error", e.what()},
                                              {"attempts", e.attempts}});
      episode.outcome = Outcome::gateway_error;
      episode.events = events.take_events();
      episode.token_usage = events.usage();
      return episode;
    }
    nlohmann::json response_payload{
        {"purpose", "main"},
        {"step", step},
        {"content", response.content},
        {"finish_reason", to_string(response.finish_reason)},
        {"attempts", response.attempts}};
    if (response.prompt_tokens) response_payload["prompt_tokens"] = *response.prompt_tokens;
    if (response.completion_tokens) {
      response_payload["completion_tokens"] = *response.completion_tokens;
    }
    events.record(EventKind::llm_response, std::move(response_payload));
    account_usage(events, chat, response);
    transcript.messages.push_back({Role::assistant, response.content, std::nullopt});

    Action action;
    try {
      action = classify(response.content, registry);
    } catch (const MalformedArgumentsError& e) {
      events.record(EventKind::parse_failure, {{"step", step}, {"reason", e.what()}});
      if (nudges < 2) {
        ++nudges;
        transcript.messages.push_back(
            {Role::user,
             std::string{"Your tool call could not be parsed: "} + e.what() +
                 ". Repeat it as tool_name({'key': 'value'}) with quoted "
                 "string arguments, or reply with `ANSWER: ...`.",
             std::nullopt});
        continue;
      }
      break;
    }

    if (action.kind == ActionKind::answer) {
      events.record(EventKind::answer, {{"raw", action.answer->raw},
                                        {"normalized", action.answer->normalized}});
      episode.final_answer = action.answer;
      episode.outcome = Outcome::answered;
      break;
    }

    if (action.kind == ActionKind::tool_call) {
      const ToolInvocation& call = *action.call;
      events.record(EventKind::tool_call,
                    {{"tool", to_string(call.tool_name)},
                     {"arguments", call.arguments},
                     {"span", {call.raw_span.begin, call.raw_span.end}}});
      std::string observation;
      bool tool_errored = false;
      try {
        ToolOutcome outcome = invoke(call, request.question, transcript, tool_deps);
        observation = std::move(outcome.observation);
        events.record(EventKind::tool_result,
                      {{"tool", to_string(call.tool_name)},
                       {"observation", observation},
                       {"ignored_arguments", outcome.ignored_arguments}});
      } catch (const ToolInputError& e) {
        observation = std::string{"Error: "} + e.what();
        tool_errored = true;
      } catch (const ToolError& e) {
        observation = std::string{"Error: "} + e.what();
        tool_errored = true;
      } catch (const GatewayError& e) {
        events.record(EventKind::llm_response, {{"purpose", "tool"},
                                                {"tool", to_string(call.tool_name)},
                                                {"finish_reason", "error"},
                                                {"error", e.what()},
                                                {"attempts", e.attempts}});
        episode.outcome = Outcome::gateway_error;
        episode.events = events.take_events();
        episode.token_usage = events.usage();
        return episode;
      }
      if (tool_errored) {
        events.record(EventKind::tool_result, {{"tool", to_string(call.tool_name)},
                                               {"observation", observation},
                                               {"error", true}});
      }
      transcript.messages.push_back({Role::tool, "Observation:\n" + observation,
                                     std::string(to_string(call.tool_name))});
      continue;
    }

    // Reasoning only: nudge at most twice across the episode, then stop.
    if (nudges < 2) {
      ++nudges;
      transcript.messages.push_back({Role::user, kContinueNudge, std::nullopt});
      continue;
    }
    break;
  }

  episode.events = events.take_events();
  episode.token_usage = events.usage();
  return episode;
}

}  // namespace cogtools
