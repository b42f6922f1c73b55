#include "cogtools/message.hpp"

#include <string>

namespace cogtools {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
  }
  return "user";
}

std::optional<Role> role_from_string(std::string_view text) {
  if (text == "system") return Role::system;
  if (text == "user") return Role::user;
  if (text == "assistant") return Role::assistant;
  if (text == "tool") return Role::tool;
  return std::nullopt;
}

std::vector<std::string> validate_transcript(const Transcript& transcript) {
  std::vector<std::string> violations;
  const auto& ms = transcript.messages;

  if (ms.empty()) {
    violations.push_back("transcript is empty");
    return violations;
  }
  if (ms[0].role != Role::system) {
    violations.push_back("message 0 must be system");
  } else if (ms.size() < 2 || ms[1].role != Role::user) {
    violations.push_back("message 1 must be user containing the question");
  } else if (!transcript.question.empty() &&
             ms[1].content.find(transcript.question) == std::string::npos) {
    violations.push_back("message 1 does not contain the question");
  }

  for (std::size_t i = 0; i < ms.size(); ++i) {
    const Message& m = ms[i];
    const std::string prefix = "message " + std::to_string(i) + ": ";
    if (m.role != Role::assistant && m.content.empty()) {
      violations.push_back(prefix + "empty content for role " +
                           std::string(to_string(m.role)));
    } else if (m.role == Role::tool && !m.tool_name.has_value()) {
      violations.push_back(prefix + "role=tool requires tool_name");
    } else if (m.role != Role::tool && m.tool_name.has_value()) {
      violations.push_back(prefix + "tool_name only allowed on role=tool");
    } else if (i >= 1 && m.role == Role::system) {
      violations.push_back(prefix + "system only allowed at index 0");
    } else if (m.role == Role::tool && ms[i - 1].role != Role::assistant) {
      violations.push_back(prefix + "tool result must follow an assistant message");
    }
  }
  return violations;
}

}  // namespace cogtools
