#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cogtools {

enum class Role { system, user, assistant, tool };

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view text);

struct Message {
  Role role = Role::user;
  std::string content;
  // Present iff role == tool: the tool that produced this observation.
  std::optional<std::string> tool_name;

  bool operator==(const Message&) const = default;
};

// A full conversation held by the orchestrator for one episode.
struct Transcript {
  std::string question;
  std::vector<Message> messages;

  bool operator==(const Transcript&) const = default;
};

// Returns an empty list iff the transcript invariants hold; otherwise one
// human-readable violation per problem, naming the offending message index.
std::vector<std::string> validate_transcript(const Transcript& transcript);

}  // namespace cogtools
