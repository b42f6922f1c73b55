#pragma once

#include <set>
#include <string>

#include "cogtools/cognitive_tools.hpp"
#include "cogtools/episode.hpp"
#include "cogtools/gateway.hpp"
#include "cogtools/message.hpp"
#include "cogtools/prompt_catalog.hpp"
#include "cogtools/run_config.hpp"

namespace cogtools {

// System prompt recorded (and sent) for strategies that do not install the
// tools prompt. Serving stacks treat it as the stock default.
inline constexpr const char* kDefaultSystemPrompt = "You are a helpful assistant.";

// User nudge appended when a reply neither answers nor calls a tool.
inline constexpr const char* kContinueNudge =
    "Continue. When done, reply with `ANSWER: ...`";

std::set<ToolName> enabled_tools(const RunConfig& config);

// [system, user] prefix per strategy. Throws ConfigError on an invalid
// config (e.g. single_tool without a tool name).
Transcript build_initial_transcript(const std::string& question,
                                    const RunConfig& config,
                                    const PromptCatalog& catalog);

struct OrchestratorDeps {
  LlmGateway& gateway;
  const PromptCatalog& catalog;
  CodeExecutor& executor;
  std::string model;
  bool send_top_k = false;
};

struct EpisodeRequest {
  std::string question_id;
  int repetition = 0;
  std::string question;
  RunConfig config;
};

// Runs the main loop: ask the model, classify the reply, dispatch tool calls
// as sub-conversations, feed observations back, and stop on an answer, on
// the step budget, or on a fatal gateway error (which yields a partial
// trace). At most two nudges are issued across the episode before giving up.
Episode run_episode(const EpisodeRequest& request, const OrchestratorDeps& deps,
                    EpisodeBuilder::LiveSink live = nullptr);

}  // namespace cogtools
