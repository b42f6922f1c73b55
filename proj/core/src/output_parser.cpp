#include "cogtools/output_parser.hpp"

#include <cctype>
#include <utility>
#include <vector>

#include "cogtools/errors.hpp"

namespace cogtools {

namespace {

constexpr std::size_t npos = std::string_view::npos;

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::size_t skip_ws(std::string_view text, std::size_t pos) {
  while (pos < text.size() && is_space(text[pos])) ++pos;
  return pos;
}

std::string_view trim_view(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// A fenced code block: [open_start, end) covers the fence lines; the body is
// [body_start, body_end).
struct FenceRegion {
  std::size_t open_start = 0;
  std::size_t body_start = 0;
  std::size_t body_end = 0;
  std::size_t end = 0;
  std::size_t indent = 0;
  bool closed = false;
};

std::vector<FenceRegion> find_fences(std::string_view text) {
  std::vector<FenceRegion> fences;
  FenceRegion current;
  bool open = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t line_end = text.find('\n', pos);
    const bool has_newline = line_end != npos;
    if (!has_newline) line_end = text.size();
    std::size_t ltrim = pos;
    while (ltrim < line_end && (text[ltrim] == ' ' || text[ltrim] == '\t')) ++ltrim;
    const bool fence_line =
        line_end - ltrim >= 3 && text.compare(ltrim, 3, "```") == 0;
    if (fence_line && !open) {
      current = FenceRegion{};
      current.open_start = pos;
      current.indent = ltrim - pos;
      current.body_start = has_newline ? line_end + 1 : text.size();
      open = true;
    } else if (fence_line && open) {
      current.body_end = pos;
      current.end = line_end;
      current.closed = true;
      fences.push_back(current);
      open = false;
    }
    pos = has_newline ? line_end + 1 : text.size();
  }
  if (open) {
    current.body_end = text.size();
    current.end = text.size();
    current.closed = false;
    fences.push_back(current);
  }
  return fences;
}

std::string parse_quoted(std::string_view text, std::size_t& pos) {
  const char quote = text[pos];
  ++pos;
  std::string out;
  while (pos < text.size()) {
    const char c = text[pos];
    if (c == '\\') {
      if (pos + 1 >= text.size()) {
        throw MalformedArgumentsError("unterminated escape sequence");
      }
      const char next = text[pos + 1];
      switch (next) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '\\': out += '\\'; break;
        case '\'': out += '\''; break;
        case '"': out += '"'; break;
        default: out += '\\'; out += next; break;
      }
      pos += 2;
    } else if (c == quote) {
      ++pos;
      return out;
    } else {
      out += c;
      ++pos;
    }
  }
  throw MalformedArgumentsError("unterminated string literal");
}

std::string escape_literal(std::string_view value) {
  std::string out;
  out.reserve(value.size());
  for (const char c : value) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string parse_integer(std::string_view text, std::size_t& pos) {
  const std::size_t start = pos;
  if (pos < text.size() && text[pos] == '-') ++pos;
  const std::size_t digits = pos;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
  if (pos == digits) throw MalformedArgumentsError("expected an integer literal");
  if (pos < text.size() && (text[pos] == '.' || text[pos] == 'e' || text[pos] == 'E')) {
    throw MalformedArgumentsError("only integer numbers are supported");
  }
  return std::string(text.substr(start, pos - start));
}

// Parses a {'key': value, ...} literal starting at text[pos] == '{'. At depth
// 0 string values are stored raw; at depth 1 (inside a nested map) values are
// stored in canonical quoted form so the nested map can be flattened to text.
std::vector<std::pair<std::string, std::string>> parse_map_body(
    std::string_view text, std::size_t& pos, int depth) {
  std::vector<std::pair<std::string, std::string>> entries;
  ++pos;
  pos = skip_ws(text, pos);
  if (pos < text.size() && text[pos] == '}') {
    ++pos;
    return entries;
  }
  while (true) {
    pos = skip_ws(text, pos);
    if (pos >= text.size() || (text[pos] != '\'' && text[pos] != '"')) {
      throw MalformedArgumentsError("map keys must be quoted strings");
    }
    std::string key = parse_quoted(text, pos);
    pos = skip_ws(text, pos);
    if (pos >= text.size() || text[pos] != ':') {
      throw MalformedArgumentsError("expected ':' after map key");
    }
    ++pos;
    pos = skip_ws(text, pos);
    if (pos >= text.size()) throw MalformedArgumentsError("unterminated map literal");
    std::string value;
    const char c = text[pos];
    if (c == '\'' || c == '"') {
      std::string raw = parse_quoted(text, pos);
      value = depth == 0 ? std::move(raw) : "'" + escape_literal(raw) + "'";
    } else if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      value = parse_integer(text, pos);
    } else if (c == '{') {
      if (depth >= 1) throw MalformedArgumentsError("map nesting exceeds one level");
      const auto nested = parse_map_body(text, pos, depth + 1);
      std::string flat = "{";
      for (std::size_t i = 0; i < nested.size(); ++i) {
        if (i) flat += ", ";
        flat += "'" + escape_literal(nested[i].first) + "': " + nested[i].second;
      }
      flat += "}";
      value = std::move(flat);
    } else {
      throw MalformedArgumentsError("unsupported value literal");
    }
    entries.emplace_back(std::move(key), std::move(value));
    pos = skip_ws(text, pos);
    if (pos < text.size() && text[pos] == ',') {
      ++pos;
      pos = skip_ws(text, pos);
      if (pos < text.size() && text[pos] == '}') {
        ++pos;
        return entries;
      }
      continue;
    }
    if (pos < text.size() && text[pos] == '}') {
      ++pos;
      return entries;
    }
    throw MalformedArgumentsError("expected ',' or '}' in map literal");
  }
}

// Parses the parenthesized argument list with text[pos] == '('. Accepts a map
// literal, an empty list, or an informal placeholder such as "params...".
std::map<std::string, std::string> parse_call_arguments(std::string_view text,
                                                        std::size_t& pos) {
  ++pos;
  pos = skip_ws(text, pos);
  std::map<std::string, std::string> args;
  if (pos >= text.size()) throw MalformedArgumentsError("unterminated call expression");
  if (text[pos] == ')') {
    ++pos;
    return args;
  }
  if (text[pos] == '{') {
    for (auto& [key, value] : parse_map_body(text, pos, 0)) {
      args[std::move(key)] = std::move(value);
    }
    pos = skip_ws(text, pos);
    if (pos >= text.size() || text[pos] != ')') {
      throw MalformedArgumentsError("expected ')' after the argument map");
    }
    ++pos;
    return args;
  }
  if (is_ident_char(text[pos]) || text[pos] == '.') {
    while (pos < text.size() && (is_ident_char(text[pos]) || text[pos] == '.')) ++pos;
    pos = skip_ws(text, pos);
    if (pos < text.size() && text[pos] == ')') {
      ++pos;
      return args;
    }
  }
  throw MalformedArgumentsError("unsupported argument literal");
}

// Parses "name({...})" with the identifier starting at pos. Returns nullopt
// when the identifier is not a registered tool or is not called.
std::optional<ToolInvocation> parse_named_call(std::string_view text,
                                               std::size_t pos,
                                               const std::set<ToolName>& registry,
                                               std::size_t span_begin) {
  std::size_t name_end = pos;
  while (name_end < text.size() && is_ident_char(text[name_end])) ++name_end;
  if (name_end == pos || name_end >= text.size() || text[name_end] != '(') {
    return std::nullopt;
  }
  const auto name = tool_name_from_string(text.substr(pos, name_end - pos));
  if (!name || !registry.count(*name)) return std::nullopt;
  std::size_t cursor = name_end;
  ToolInvocation invocation;
  invocation.tool_name = *name;
  invocation.arguments = parse_call_arguments(text, cursor);
  invocation.raw_span = ByteSpan{span_begin, cursor};
  return invocation;
}

// Parses a statement beginning at pos: a registered call, optionally wrapped
// in print(...). The span covers the wrapper when present.
std::optional<ToolInvocation> parse_statement(std::string_view text,
                                              std::size_t pos,
                                              const std::set<ToolName>& registry) {
  std::size_t name_end = pos;
  while (name_end < text.size() && is_ident_char(text[name_end])) ++name_end;
  if (name_end < text.size() && text[name_end] == '(' &&
      text.substr(pos, name_end - pos) == "print") {
    const std::size_t inner = skip_ws(text, name_end + 1);
    auto call = parse_named_call(text, inner, registry, pos);
    if (!call) return std::nullopt;
    std::size_t cursor = skip_ws(text, call->raw_span.end);
    if (cursor < text.size() && text[cursor] == ')') {
      call->raw_span.end = cursor + 1;
    }
    return call;
  }
  return parse_named_call(text, pos, registry, pos);
}

// First bare (or print-wrapped) registered call inside [begin, end).
std::optional<ToolInvocation> scan_prose(std::string_view text, std::size_t begin,
                                         std::size_t end,
                                         const std::set<ToolName>& registry) {
  std::optional<std::size_t> site;
  for (const ToolName tool : all_tools()) {
    if (!registry.count(tool)) continue;
    const std::string_view name = to_string(tool);
    std::size_t from = begin;
    while (from < end) {
      const std::size_t found = text.find(name, from);
      if (found == npos || found + name.size() > end) break;
      const bool boundary_ok = found == 0 || !is_ident_char(text[found - 1]);
      const std::size_t after = found + name.size();
      if (boundary_ok && after < end && text[after] == '(') {
        if (!site || found < *site) site = found;
        break;
      }
      from = found + 1;
    }
  }
  if (!site) return std::nullopt;

  std::size_t span_begin = *site;
  bool wrapped = false;
  std::size_t back = *site;
  while (back > begin && is_space(text[back - 1])) --back;
  if (back > begin && text[back - 1] == '(') {
    std::size_t ident_end = back - 1;
    while (ident_end > begin && is_space(text[ident_end - 1])) --ident_end;
    std::size_t ident_start = ident_end;
    while (ident_start > begin && is_ident_char(text[ident_start - 1])) --ident_start;
    if (ident_end - ident_start == 5 &&
        text.compare(ident_start, 5, "print") == 0 &&
        (ident_start == 0 || !is_ident_char(text[ident_start - 1]))) {
      wrapped = true;
      span_begin = ident_start;
    }
  }
  auto call = parse_named_call(text, *site, registry, span_begin);
  if (call && wrapped) {
    const std::size_t cursor = skip_ws(text, call->raw_span.end);
    if (cursor < text.size() && text[cursor] == ')') {
      call->raw_span.end = cursor + 1;
    }
  }
  return call;
}

std::optional<std::size_t> fence_first_statement(std::string_view text,
                                                 const FenceRegion& fence) {
  std::size_t pos = fence.body_start;
  while (pos < fence.body_end) {
    std::size_t line_end = text.find('\n', pos);
    if (line_end == npos || line_end > fence.body_end) line_end = fence.body_end;
    std::size_t first = pos;
    while (first < line_end && (text[first] == ' ' || text[first] == '\t')) ++first;
    if (first < line_end && text[first] != '#') return first;
    pos = line_end + 1;
  }
  return std::nullopt;
}

bool is_emphasis_char(char c) { return c == '*' || c == '_' || c == '`'; }

std::string strip_emphasis(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  while (b < e && is_emphasis_char(s[b])) ++b;
  while (e > b && is_emphasis_char(s[e - 1])) --e;
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

bool is_horizontal_rule(std::string_view line) {
  char kind = 0;
  int count = 0;
  for (const char c : line) {
    if (c == ' ' || c == '\t') continue;
    if (c != '-' && c != '*' && c != '_') return false;
    if (!kind) kind = c;
    if (c != kind) return false;
    ++count;
  }
  return count >= 3;
}

// Marker offset + payload of the last "ANSWER:" that carries one.
std::optional<std::pair<std::size_t, FinalAnswer>> find_final_answer(
    std::string_view text) {
  std::vector<std::size_t> markers;
  std::size_t from = 0;
  while (true) {
    const std::size_t found = text.find("ANSWER", from);
    if (found == npos) break;
    from = found + 1;
    if (found > 0 && is_ident_char(text[found - 1])) continue;
    std::size_t pos = found + 6;
    while (pos < text.size() && is_emphasis_char(text[pos])) ++pos;
    if (pos >= text.size() || text[pos] != ':') continue;
    markers.push_back(found);
  }
  for (auto it = markers.rbegin(); it != markers.rend(); ++it) {
    const std::size_t found = *it;
    std::size_t colon = found + 6;
    while (text[colon] != ':') ++colon;
    std::size_t line_end = text.find('\n', colon);
    if (line_end == npos) line_end = text.size();
    std::string payload = strip_emphasis(text.substr(colon + 1, line_end - colon - 1));
    std::size_t pos = line_end;
    while (payload.empty() && pos < text.size()) {
      ++pos;
      std::size_t next_end = text.find('\n', pos);
      if (next_end == npos) next_end = text.size();
      const std::string_view line = trim_view(text.substr(pos, next_end - pos));
      if (!line.empty() && !is_horizontal_rule(line)) {
        payload = strip_emphasis(line);
        break;
      }
      pos = next_end;
    }
    if (!payload.empty()) {
      FinalAnswer answer{payload, normalize_answer(payload)};
      return std::make_pair(found, std::move(answer));
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<ToolInvocation> extract_tool_call(std::string_view text,
                                                const std::set<ToolName>& registry) {
  if (registry.empty()) return std::nullopt;
  const auto fences = find_fences(text);
  std::size_t cursor = 0;
  for (const FenceRegion& fence : fences) {
    if (auto call = scan_prose(text, cursor, fence.open_start, registry)) return call;
    if (const auto stmt = fence_first_statement(text, fence)) {
      if (auto call = parse_statement(text, *stmt, registry)) return call;
    }
    cursor = fence.end;
  }
  return scan_prose(text, cursor, text.size(), registry);
}

std::optional<FinalAnswer> extract_final_answer(std::string_view text) {
  auto found = find_final_answer(text);
  if (!found) return std::nullopt;
  return std::move(found->second);
}

std::optional<std::string> extract_code_block(std::string_view text) {
  const auto fences = find_fences(text);
  if (fences.empty()) return std::nullopt;
  const FenceRegion& fence = fences.front();
  if (!fence.closed) throw UnterminatedFenceError("code fence never closes");
  std::string body;
  std::size_t pos = fence.body_start;
  bool first_line = true;
  while (pos < fence.body_end) {
    std::size_t line_end = text.find('\n', pos);
    if (line_end == npos || line_end > fence.body_end) line_end = fence.body_end;
    std::size_t strip = 0;
    while (strip < fence.indent && pos + strip < line_end &&
           (text[pos + strip] == ' ' || text[pos + strip] == '\t')) {
      ++strip;
    }
    if (!first_line) body += '\n';
    body.append(text.substr(pos + strip, line_end - pos - strip));
    first_line = false;
    pos = line_end + 1;
  }
  return body;
}

Action classify(std::string_view text, const std::set<ToolName>& registry) {
  Action action;
  std::optional<ToolInvocation> call = extract_tool_call(text, registry);
  if (!call && registry.count(ToolName::use_code)) {
    const auto fences = find_fences(text);
    if (!fences.empty()) {
      ToolInvocation implicit;
      implicit.tool_name = ToolName::use_code;
      implicit.raw_span = ByteSpan{fences.front().open_start, fences.front().end};
      call = std::move(implicit);
    }
  }
  const auto answer = find_final_answer(text);
  if (answer && (!call || answer->first > call->raw_span.begin)) {
    action.kind = ActionKind::answer;
    action.answer = answer->second;
    return action;
  }
  if (call) {
    action.kind = ActionKind::tool_call;
    action.call = std::move(call);
    return action;
  }
  return action;
}

std::string normalize_answer(std::string_view raw) {
  std::string s(trim_view(raw));
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    const auto strip_pair = [&](std::string_view open, std::string_view close) {
      if (s.size() >= open.size() + close.size() &&
          s.compare(0, open.size(), open) == 0 &&
          s.compare(s.size() - close.size(), close.size(), close) == 0) {
        s = std::string(trim_view(
            std::string_view(s).substr(open.size(), s.size() - open.size() - close.size())));
        changed = true;
        return true;
      }
      return false;
    };
    if (strip_pair("$$", "$$")) continue;
    if (strip_pair("\\(", "\\)")) continue;
    if (strip_pair("\\[", "\\]")) continue;
    if (strip_pair("**", "**")) continue;
    if (strip_pair("__", "__")) continue;
    if (strip_pair("`", "`")) continue;
    if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
      if (strip_pair("$", "$")) continue;
    }
    if (s.size() >= 2 && ((s.front() == '\'' && s.back() == '\'') ||
                          (s.front() == '"' && s.back() == '"'))) {
      s = std::string(trim_view(std::string_view(s).substr(1, s.size() - 2)));
      changed = true;
      continue;
    }
    if (s.size() >= 3 && s.front() == '*' && s.back() == '*') {
      s = std::string(trim_view(std::string_view(s).substr(1, s.size() - 2)));
      changed = true;
      continue;
    }
    if (s.rfind("\\boxed{", 0) == 0 && s.back() == '}') {
      int depth = 0;
      bool wraps_whole = true;
      for (std::size_t i = 6; i < s.size(); ++i) {
        if (s[i] == '{') ++depth;
        else if (s[i] == '}') {
          --depth;
          if (depth == 0 && i != s.size() - 1) {
            wraps_whole = false;
            break;
          }
        }
      }
      if (wraps_whole && depth == 0) {
        s = std::string(trim_view(std::string_view(s).substr(7, s.size() - 8)));
        changed = true;
        continue;
      }
    }
  }
  if (s.size() > 1 && s.back() == '.') s.pop_back();
  std::string out;
  bool pending_space = false;
  for (const char c : s) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::string render_invocation(const ToolInvocation& invocation, CallSyntax syntax) {
  std::string args = "{";
  bool first = true;
  for (const auto& [key, value] : invocation.arguments) {
    if (!first) args += ", ";
    first = false;
    args += "'" + escape_literal(key) + "': '" + escape_literal(value) + "'";
  }
  args += "}";
  const std::string call =
      std::string(to_string(invocation.tool_name)) + "(" + args + ")";
  switch (syntax) {
    case CallSyntax::bare: return call;
    case CallSyntax::print_wrapped: return "print(" + call + ")";
    case CallSyntax::fenced: return "```python\n" + call + "\n```";
    case CallSyntax::fenced_print: return "```python\nprint(" + call + ")\n```";
  }
  return call;
}

}  // namespace cogtools
