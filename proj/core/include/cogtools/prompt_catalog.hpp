#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cogtools/tool_names.hpp"

namespace cogtools {

enum class TemplateId {
  cognitive_tools_system,
  cognitive_tools_system_no_motivation,
  understand_question,
  recall_related,
  examine_answer,
  backtracking,
  use_code,
  cognitive_prompting,
  baseline_prefix,
  judge,
};

inline constexpr int kTemplateCount = 10;

std::string_view to_string(TemplateId id);
std::optional<TemplateId> template_id_from_string(std::string_view text);

struct PromptTemplate {
  TemplateId id = TemplateId::baseline_prefix;
  std::string body;
  std::vector<std::string> placeholders;  // every {{name}} in body, in order
};

// Immutable set of the ten templates. The builtin catalog carries the bodies
// embedded at build time; load_dir() reads the same files from disk and
// refuses to start when any body's digest differs from the builtin manifest
// (unless editing is explicitly allowed).
class PromptCatalog {
 public:
  static const PromptCatalog& builtin();
  static PromptCatalog load_dir(const std::filesystem::path& dir,
                                bool allow_edits = false);

  const PromptTemplate& get(TemplateId id) const;

  // Substitutes {{name}} placeholders. Throws PromptError when a placeholder
  // used by the template has no binding; unused bindings are ignored.
  std::string render(TemplateId id,
                     const std::map<std::string, std::string>& bindings) const;

  // Writes one <id>.txt per template into dir (created if needed).
  void export_dir(const std::filesystem::path& dir) const;

  // FNV-1a 64 over the trailing-newline-normalized body.
  static std::uint64_t digest(std::string_view body);

  // Deterministic one-stanza-per-tool block, preserving the given order.
  // Throws PromptError when tools is empty.
  static std::string tool_signature_block(const std::vector<ToolName>& tools);

 private:
  PromptCatalog() = default;
  std::vector<PromptTemplate> templates_;  // indexed by TemplateId
};

namespace detail {
struct BuiltinPrompt {
  const char* id;
  const char* body;
};
extern const BuiltinPrompt kBuiltinPrompts[];
extern const std::size_t kBuiltinPromptCount;
}  // namespace detail

}  // namespace cogtools
