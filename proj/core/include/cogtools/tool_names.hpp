#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace cogtools {

enum class ToolName {
  understand_question,
  recall_related,
  examine_answer,
  backtracking,
  use_code,
};

inline constexpr int kToolCount = 5;

std::string_view to_string(ToolName name);
std::optional<ToolName> tool_name_from_string(std::string_view text);

// The five tools in their canonical presentation order (the order used for
// signature blocks and usage statistics).
const std::vector<ToolName>& all_tools();

}  // namespace cogtools
