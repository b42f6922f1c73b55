#include "cogtools/prompt_catalog.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "cogtools/errors.hpp"

namespace cogtools {

namespace {

constexpr std::string_view kTemplateNames[kTemplateCount] = {
    "cognitive_tools_system",
    "cognitive_tools_system_no_motivation",
    "understand_question",
    "recall_related",
    "examine_answer",
    "backtracking",
    "use_code",
    "cognitive_prompting",
    "baseline_prefix",
    "judge",
};

struct Signature {
  ToolName tool;
  std::string_view args;
  std::string_view role;
};

constexpr Signature kSignatures[kToolCount] = {
    {ToolName::understand_question, "question",
     "break the question down into its goal, known data, and a candidate solution strategy"},
    {ToolName::recall_related, "question",
     "recall solved problems analogous to the current one to guide the solution"},
    {ToolName::examine_answer, "question, current_proposed_answer",
     "critically examine the current reasoning trace and proposed answer for errors"},
    {ToolName::backtracking, "question",
     "locate the last correct step in the reasoning trace and propose a revised strategy from it"},
    {ToolName::use_code, "question",
     "write and execute Python code for the computation and return its output"},
};

std::string strip_trailing_newlines(std::string_view body) {
  std::size_t end = body.size();
  while (end > 0 && (body[end - 1] == '\n' || body[end - 1] == '\r')) --end;
  return std::string(body.substr(0, end));
}

std::vector<std::string> scan_placeholders(const std::string& body) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = body.find("{{", pos)) != std::string::npos) {
    const std::size_t close = body.find("}}", pos + 2);
    if (close == std::string::npos) break;
    const std::string name = body.substr(pos + 2, close - pos - 2);
    bool identifier = !name.empty() &&
                      (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
    for (char c : name) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') identifier = false;
    }
    if (identifier) {
      bool seen = false;
      for (const auto& existing : names) {
        if (existing == name) seen = true;
      }
      if (!seen) names.push_back(name);
      pos = close + 2;
    } else {
      pos += 2;
    }
  }
  return names;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PromptError("cannot open prompt file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string_view to_string(TemplateId id) {
  const auto index = static_cast<std::size_t>(id);
  if (index < kTemplateCount) return kTemplateNames[index];
  return "";
}

std::optional<TemplateId> template_id_from_string(std::string_view text) {
  for (int i = 0; i < kTemplateCount; ++i) {
    if (kTemplateNames[i] == text) return static_cast<TemplateId>(i);
  }
  return std::nullopt;
}

const PromptCatalog& PromptCatalog::builtin() {
  static const PromptCatalog catalog = [] {
    PromptCatalog built;
    built.templates_.resize(kTemplateCount);
    std::size_t filled = 0;
    for (std::size_t i = 0; i < detail::kBuiltinPromptCount; ++i) {
      const auto id = template_id_from_string(detail::kBuiltinPrompts[i].id);
      if (!id) {
        throw PromptError(std::string{"unknown builtin template id: "} +
                          detail::kBuiltinPrompts[i].id);
      }
      PromptTemplate& slot = built.templates_[static_cast<std::size_t>(*id)];
      slot.id = *id;
      slot.body = strip_trailing_newlines(detail::kBuiltinPrompts[i].body);
      slot.placeholders = scan_placeholders(slot.body);
      ++filled;
    }
    if (filled != kTemplateCount) {
      throw PromptError("builtin catalog is incomplete");
    }
    return built;
  }();
  return catalog;
}

PromptCatalog PromptCatalog::load_dir(const std::filesystem::path& dir,
                                      bool allow_edits) {
  const PromptCatalog& reference = builtin();
  PromptCatalog catalog;
  catalog.templates_.resize(kTemplateCount);
  for (int i = 0; i < kTemplateCount; ++i) {
    const auto id = static_cast<TemplateId>(i);
    const auto path = dir / (std::string(to_string(id)) + ".txt");
    PromptTemplate entry;
    entry.id = id;
    entry.body = strip_trailing_newlines(read_file(path));
    entry.placeholders = scan_placeholders(entry.body);
    if (!allow_edits && digest(entry.body) != digest(reference.get(id).body)) {
      throw PromptError("prompt file differs from the builtin manifest: " +
                        path.string() + " (pass --allow-prompt-edits to accept)");
    }
    catalog.templates_[static_cast<std::size_t>(i)] = std::move(entry);
  }
  return catalog;
}

const PromptTemplate& PromptCatalog::get(TemplateId id) const {
  const auto index = static_cast<std::size_t>(id);
  if (index >= templates_.size()) {
    throw PromptError("unknown template id");
  }
  return templates_[index];
}

std::string PromptCatalog::render(
    TemplateId id, const std::map<std::string, std::string>& bindings) const {
  const PromptTemplate& tmpl = get(id);
  for (const auto& name : tmpl.placeholders) {
    if (!bindings.count(name)) {
      throw PromptError("missing placeholder binding: " + name);
    }
  }
  std::string out;
  out.reserve(tmpl.body.size());
  std::size_t pos = 0;
  while (pos < tmpl.body.size()) {
    const std::size_t open = tmpl.body.find("{{", pos);
    if (open == std::string::npos) {
      out.append(tmpl.body, pos, std::string::npos);
      break;
    }
    out.append(tmpl.body, pos, open - pos);
    const std::size_t close = tmpl.body.find("}}", open + 2);
    std::string name;
    if (close != std::string::npos) name = tmpl.body.substr(open + 2, close - open - 2);
    const auto it = bindings.find(name);
    if (close != std::string::npos && it != bindings.end()) {
      out += it->second;
      pos = close + 2;
    } else {
      out += "{{";
      pos = open + 2;
    }
  }
  return out;
}

void PromptCatalog::export_dir(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const PromptTemplate& tmpl : templates_) {
    const auto path = dir / (std::string(to_string(tmpl.id)) + ".txt");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PromptError("cannot write prompt file: " + path.string());
    out << tmpl.body << '\n';
  }
}

std::uint64_t PromptCatalog::digest(std::string_view body) {
  const std::string normalized = strip_trailing_newlines(body);
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : normalized) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string PromptCatalog::tool_signature_block(
    const std::vector<ToolName>& tools) {
  if (tools.empty()) throw PromptError("at least one tool required");
  std::string block;
  for (std::size_t i = 0; i < tools.size(); ++i) {
    const Signature* found = nullptr;
    for (const Signature& sig : kSignatures) {
      if (sig.tool == tools[i]) found = &sig;
    }
    if (!found) throw PromptError("unknown tool name");
    if (i) block += '\n';
    block += "Tool: ";
    block += to_string(tools[i]);
    block += '(';
    block += found->args;
    block += ") — ";
    block += found->role;
  }
  return block;
}

}  // namespace cogtools
