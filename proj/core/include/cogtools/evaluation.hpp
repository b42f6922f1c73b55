#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cogtools/episode.hpp"
#include "cogtools/gateway.hpp"
#include "cogtools/orchestrator.hpp"
#include "cogtools/prompt_catalog.hpp"
#include "cogtools/stats.hpp"

namespace cogtools {

enum class GradeMethod { exact_numeric, expression_equivalence, llm_judge };

std::string_view to_string(GradeMethod method);

struct GradeVerdict {
  bool correct = false;
  GradeMethod method = GradeMethod::exact_numeric;
  // Set only for llm_judge with a well-formed reply ("Yes" or "No").
  std::optional<std::string> judge_raw;
};

enum class GradeMode { parse, judge };

std::string_view to_string(GradeMode mode);
std::optional<GradeMode> grade_mode_from_string(std::string_view text);

// Parse-mode grading: normalize both sides, compare numerically (rel 1e-9,
// abs 1e-12 near zero; exact rational arithmetic when both sides are
// rationals), fall back to unit stripping, sampling-based expression
// equivalence, then literal comparison.
GradeVerdict grade_parse(std::string_view answer, std::string_view truth);

// Judge-mode grading: renders the judge template with both expressions and
// queries the gateway at temperature 0. A reply other than Yes/No (after
// trimming) is retried once, then marked incorrect with judge_raw unset.
GradeVerdict grade_judge(std::string_view answer, std::string_view truth,
                         LlmGateway& gateway, const PromptCatalog& catalog,
                         const std::string& model);

GradeVerdict grade(std::string_view answer, std::string_view truth,
                   GradeMode mode, LlmGateway* gateway,
                   const PromptCatalog& catalog, const std::string& model);

// parse for AIME/AMC/Smolbenchmark-style datasets, judge for MATH500.
GradeMode default_grade_mode(std::string_view dataset_name);

struct DatasetItem {
  std::string id;
  std::string question;
  std::string answer;
  std::string subject;  // optional in the file
};

// Line-delimited records {"id", "question", "answer", "subject"?}. Throws
// DatasetError naming the offending line.
std::vector<DatasetItem> load_dataset(const std::filesystem::path& path);

struct ToolUsageStats {
  std::vector<ToolName> tools;  // canonical order
  std::map<ToolName, double> per_tool_frequency;  // percent of episodes
  // Aligned to `tools`; diagonal exactly 1; nullopt where an indicator is
  // constant and the correlation is undefined.
  std::vector<std::vector<std::optional<double>>> correlation;
};

ToolUsageStats tool_usage(const std::vector<Episode>& episodes);

struct EvalOptions {
  std::string dataset_name;
  int repetitions = 16;
  int concurrency = 4;
  GradeMode grade_mode = GradeMode::parse;
  RunConfig config;
  std::string model;
  std::filesystem::path out_dir;
  bool resume = false;
  // When set, every episode replays against a fresh cursor from this library
  // instead of the live gateway.
  const ScriptLibrary* scripts = nullptr;
};

struct EvalResult {
  AccuracySummary summary;
  ToolUsageStats usage;
  std::vector<double> per_repetition_accuracy;
  int errored_episodes = 0;
  int completed_episodes = 0;
  int total_episodes = 0;
  std::vector<std::string> errored_ids;  // "question_id#rep"
};

// Runs repetitions x questions episodes over a worker pool, grades them,
// writes out_dir/episodes.jsonl (in deterministic question-major order) and
// out_dir/summary.json, and returns the aggregate. With resume, episodes
// already present in episodes.jsonl are kept and only the remainder runs.
EvalResult run_eval(const std::vector<DatasetItem>& items,
                    const EvalOptions& options, const OrchestratorDeps& deps);

nlohmann::json summary_to_json(const EvalResult& result,
                               const EvalOptions& options);

// Renders the human-readable accuracy table ("mean ± stderr").
std::string format_summary_table(const nlohmann::json& summary);

struct CompareRow {
  std::string dataset;
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;
  bool significant = false;  // p < 0.05
  double mean_a = 0.0;
  double mean_b = 0.0;
};

// Welch's t-test between two summary reports over their per-repetition
// accuracies. Throws ReportError when the reports cover different datasets.
CompareRow compare_reports(const nlohmann::json& report_a,
                           const nlohmann::json& report_b);

std::string format_compare_table(const std::vector<CompareRow>& rows);

}  // namespace cogtools
