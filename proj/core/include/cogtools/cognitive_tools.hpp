#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cogtools/code_executor.hpp"
#include "cogtools/episode.hpp"
#include "cogtools/gateway.hpp"
#include "cogtools/invocation.hpp"
#include "cogtools/message.hpp"
#include "cogtools/prompt_catalog.hpp"

namespace cogtools {

// Where a tool input value comes from when the caller does not pass it
// explicitly as an argument.
enum class InputSource { question, current_trace, proposed_answer, caller_arguments };

struct ToolInput {
  std::string name;
  InputSource source = InputSource::question;
  bool required = true;
};

struct ToolSpec {
  ToolName name = ToolName::understand_question;
  TemplateId prompt = TemplateId::understand_question;
  std::vector<ToolInput> inputs;
  // One-line role used by the signature block.
  std::string summary;
};

const ToolSpec& tool_spec(ToolName name);

// Prior assistant turns and Observation-prefixed tool turns, newest-last,
// joined by blank lines and truncated to the most recent `limit` characters
// on whole-message boundaries.
std::string render_trace(const Transcript& transcript, std::size_t limit = 6000);

struct ToolDeps {
  LlmGateway& gateway;
  const PromptCatalog& catalog;
  CodeExecutor& executor;
  EpisodeBuilder& events;
  std::string model;
  SamplingParams sampling;
  int per_call_token_limit = 4096;
  int max_code_retries = 2;
  bool send_top_k = false;
};

struct ToolOutcome {
  std::string observation;
  // Argument keys that were accepted but ignored (e.g. 'model').
  std::vector<std::string> ignored_arguments;
};

// Runs one cognitive tool as a fresh two-message sub-conversation against
// the same backend: system = the tool's prompt, user = its rendered inputs.
// No orchestrator history leaks in beyond the rendered trace inputs. The
// reply text is the observation, returned verbatim. use_code additionally
// extracts the fenced code from the reply, executes it, and retries the
// sub-conversation with the error appended (up to max_code_retries).
// Throws ToolInputError when a required input cannot be resolved, ToolError
// when a use_code reply carries no code block after the final retry, and
// propagates GatewayError.
ToolOutcome invoke(const ToolInvocation& invocation,
                   const std::string& question,
                   const Transcript& transcript,
                   ToolDeps& deps);

// Observation layout for use_code results.
std::string format_code_observation(const std::string& code,
                                    const std::string& output);

}  // namespace cogtools
