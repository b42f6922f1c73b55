#include "cogtools/tool_names.hpp"

namespace cogtools {

std::string_view to_string(ToolName name) {
  switch (name) {
    case ToolName::understand_question: return "understand_question";
    case ToolName::recall_related: return "recall_related";
    case ToolName::examine_answer: return "examine_answer";
    case ToolName::backtracking: return "backtracking";
    case ToolName::use_code: return "use_code";
  }
  return "understand_question";
}

std::optional<ToolName> tool_name_from_string(std::string_view text) {
  for (ToolName name : all_tools()) {
    if (to_string(name) == text) return name;
  }
  return std::nullopt;
}

const std::vector<ToolName>& all_tools() {
  static const std::vector<ToolName> tools = {
      ToolName::understand_question, ToolName::recall_related,
      ToolName::examine_answer, ToolName::backtracking, ToolName::use_code};
  return tools;
}

}  // namespace cogtools
