#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "cogtools/tool_names.hpp"

namespace cogtools {

// Half-open byte range [begin, end) into the text a value was parsed from.
struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const ByteSpan&) const = default;
};

// One tool call extracted from an assistant reply. Arguments are kept as
// text; nested flat maps are flattened to their canonical literal rendering.
struct ToolInvocation {
  ToolName tool_name = ToolName::understand_question;
  std::map<std::string, std::string> arguments;
  ByteSpan raw_span;

  bool operator==(const ToolInvocation&) const = default;
};

struct FinalAnswer {
  std::string raw;         // marker payload, trimmed, never empty
  std::string normalized;  // grading-oriented normalization of raw

  bool operator==(const FinalAnswer&) const = default;
};

}  // namespace cogtools
