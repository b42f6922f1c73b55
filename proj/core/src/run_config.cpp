#include "cogtools/run_config.hpp"

namespace cogtools {

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::baseline: return "baseline";
    case Strategy::cot: return "cot";
    case Strategy::code_only: return "code_only";
    case Strategy::cognitive_prompting: return "cognitive_prompting";
    case Strategy::cognitive_tools: return "cognitive_tools";
    case Strategy::single_tool: return "single_tool";
  }
  return "baseline";
}

std::optional<Strategy> strategy_from_string(std::string_view text) {
  if (text == "baseline") return Strategy::baseline;
  if (text == "cot") return Strategy::cot;
  if (text == "code_only") return Strategy::code_only;
  if (text == "cognitive_prompting") return Strategy::cognitive_prompting;
  if (text == "cognitive_tools") return Strategy::cognitive_tools;
  if (text == "single_tool") return Strategy::single_tool;
  return std::nullopt;
}

std::vector<std::string> validate_run_config(const RunConfig& config) {
  std::vector<std::string> violations;
  if (config.strategy == Strategy::single_tool && !config.single_tool) {
    violations.push_back("single_tool strategy requires a tool name");
  }
  if (config.strategy != Strategy::single_tool && config.single_tool) {
    violations.push_back("single_tool name set but strategy is not single_tool");
  }
  if (config.max_steps < 1) {
    violations.push_back("max_steps must be >= 1");
  }
  if (config.max_code_retries < 0) {
    violations.push_back("max_code_retries must be >= 0");
  }
  if (config.per_call_token_limit < 1) {
    violations.push_back("per_call_token_limit must be >= 1");
  }
  if (config.sampling.temperature < 0.0 || config.sampling.temperature > 2.0) {
    violations.push_back("temperature must be in [0, 2]");
  }
  if (!(config.sampling.top_p > 0.0) || config.sampling.top_p > 1.0) {
    violations.push_back("top_p must be in (0, 1]");
  }
  if (config.sampling.top_k && *config.sampling.top_k < 1) {
    violations.push_back("top_k must be positive");
  }
  return violations;
}

}  // namespace cogtools
