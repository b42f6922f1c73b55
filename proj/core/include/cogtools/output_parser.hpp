#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "cogtools/invocation.hpp"
#include "cogtools/tool_names.hpp"

namespace cogtools {

// First tool call in document order, or nullopt when the text calls no
// registered tool. Recognized shapes:
//   - a fenced code block whose body's first statement calls a registered
//     tool (optionally print(...)-wrapped),
//   - a bare call expression in prose, optionally print(...)-wrapped.
// Arguments come from a Python-style map literal: quoted strings, integers,
// and one level of nested flat maps. Throws MalformedArgumentsError when a
// registered tool is called with an unparseable literal.
std::optional<ToolInvocation> extract_tool_call(
    std::string_view text, const std::set<ToolName>& registry);

// Payload of the LAST "ANSWER:" marker (case-sensitive; markdown emphasis or
// backticks around the marker are tolerated). The raw value is the rest of
// the marker's line, or the next non-empty line when the marker ends its
// line; surrounding emphasis is stripped. Returns nullopt when no marker
// carries a non-empty payload.
std::optional<FinalAnswer> extract_final_answer(std::string_view text);

// Body of the first fenced code block (any info-string; fence indentation is
// removed from body lines). Returns nullopt when the text has no fence;
// throws UnterminatedFenceError when a fence opens and never closes.
std::optional<std::string> extract_code_block(std::string_view text);

enum class ActionKind { answer, tool_call, reasoning_only };

struct Action {
  ActionKind kind = ActionKind::reasoning_only;
  std::optional<FinalAnswer> answer;     // set when kind == answer
  std::optional<ToolInvocation> call;    // set when kind == tool_call
};

// Decides what an assistant reply asks for. An answer marker wins over a
// tool call only when it appears after the call site; a code fence that is
// not a registered call counts as an implicit use_code call when use_code is
// registered. Never returns tool_call for an unregistered name.
Action classify(std::string_view text, const std::set<ToolName>& registry);

// Answer normalization shared with grading: strips math/markdown wrapping
// and collapses whitespace.
std::string normalize_answer(std::string_view raw);

// Rendering used by round-trip tests and trace tooling.
enum class CallSyntax { bare, print_wrapped, fenced, fenced_print };

std::string render_invocation(const ToolInvocation& invocation,
                              CallSyntax syntax);

}  // namespace cogtools
