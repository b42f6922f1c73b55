#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cogtools/tool_names.hpp"

namespace cogtools {

enum class Strategy {
  baseline,
  cot,
  code_only,
  cognitive_prompting,
  cognitive_tools,
  single_tool,
};

std::string_view to_string(Strategy strategy);
std::optional<Strategy> strategy_from_string(std::string_view text);

struct SamplingParams {
  double temperature = 0.7;
  double top_p = 0.95;
  std::optional<int> top_k;
  std::optional<std::uint64_t> seed;

  bool operator==(const SamplingParams&) const = default;
};

struct RunConfig {
  Strategy strategy = Strategy::cognitive_tools;
  // Set iff strategy == single_tool.
  std::optional<ToolName> single_tool;
  bool motivational_cues = true;
  SamplingParams sampling;
  int max_steps = 12;
  int max_code_retries = 2;
  int per_call_token_limit = 4096;

  bool operator==(const RunConfig&) const = default;
};

// Empty iff the config is usable.
std::vector<std::string> validate_run_config(const RunConfig& config);

}  // namespace cogtools
