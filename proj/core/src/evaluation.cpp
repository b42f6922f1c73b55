#include "cogtools/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

#include "cogtools/answer_compare.hpp"
#include "cogtools/errors.hpp"
#include "cogtools/output_parser.hpp"
#include "cogtools/tool_names.hpp"

namespace cogtools {

namespace {

std::string trim_copy(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string compact(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", value);
  return buf;
}

std::string pad_left(const std::string& text, std::size_t width) {
  if (text.size() >= width) return text;
  return std::string(width - text.size(), ' ') + text;
}

std::string pad_right(const std::string& text, std::size_t width) {
  if (text.size() >= width) return text;
  return text + std::string(width - text.size(), ' ');
}

}  // namespace

std::string_view to_string(GradeMethod method) {
  switch (method) {
    case GradeMethod::exact_numeric: return "exact_numeric";
    case GradeMethod::expression_equivalence: return "expression_equivalence";
    case GradeMethod::llm_judge: return "llm_judge";
  }
  return "exact_numeric";
}

std::string_view to_string(GradeMode mode) {
  return mode == GradeMode::parse ? "parse" : "judge";
}

std::optional<GradeMode> grade_mode_from_string(std::string_view text) {
  if (text == "parse") return GradeMode::parse;
  if (text == "judge") return GradeMode::judge;
  return std::nullopt;
}

GradeVerdict grade_parse(std::string_view answer, std::string_view truth) {
  GradeVerdict verdict;
  verdict.method = GradeMethod::exact_numeric;

  const std::string a = normalize_answer(answer);
  const std::string b = normalize_answer(truth);

  const auto na = parse_number(a);
  const auto nb = parse_number(b);
  if (na && nb) {
    verdict.correct = numbers_equal(*na, *nb);
    return verdict;
  }

  // Benefit of the doubt to trailing units: "72 degrees" vs "72".
  const auto ua = na ? std::optional<std::string>(a) : strip_unit_suffix(a);
  const auto ub = nb ? std::optional<std::string>(b) : strip_unit_suffix(b);
  if (ua && ub) {
    const auto pa = parse_number(*ua);
    const auto pb = parse_number(*ub);
    if (pa && pb) {
      verdict.correct = numbers_equal(*pa, *pb);
      return verdict;
    }
  }

  if (const auto equivalent = expressions_equivalent(a, b)) {
    verdict.method = GradeMethod::expression_equivalence;
    verdict.correct = *equivalent;
    return verdict;
  }

  verdict.correct = !a.empty() && a == b;
  return verdict;
}

GradeVerdict grade_judge(std::string_view answer, std::string_view truth,
                         LlmGateway& gateway, const PromptCatalog& catalog,
                         const std::string& model) {
  GradeVerdict verdict;
  verdict.method = GradeMethod::llm_judge;
  verdict.correct = false;

  ChatRequest request;
  request.model = model;
  request.messages.push_back(
      {Role::user,
       catalog.render(TemplateId::judge, {{"expression1", std::string(answer)},
                                          {"expression2", std::string(truth)}}),
       std::nullopt});
  request.sampling.temperature = 0.0;
  request.sampling.top_p = 1.0;
  request.max_tokens = 16;

  for (int attempt = 0; attempt < 2; ++attempt) {
    const ChatResponse response = gateway.complete(request);
    const std::string reply = trim_copy(response.content);
    if (reply == "Yes" || reply == "No") {
      verdict.correct = reply == "Yes";
      verdict.judge_raw = reply;
      return verdict;
    }
  }
  return verdict;
}

GradeVerdict grade(std::string_view answer, std::string_view truth,
                   GradeMode mode, LlmGateway* gateway,
                   const PromptCatalog& catalog, const std::string& model) {
  if (mode == GradeMode::parse) return grade_parse(answer, truth);
  if (gateway == nullptr) throw ConfigError("judge grading requires a gateway");
  return grade_judge(answer, truth, *gateway, catalog, model);
}

GradeMode default_grade_mode(std::string_view dataset_name) {
  std::string squashed;
  for (char c : lowercase(dataset_name)) {
    if (std::isalnum(static_cast<unsigned char>(c))) squashed.push_back(c);
  }
  if (squashed.find("math500") != std::string::npos) return GradeMode::judge;
  return GradeMode::parse;
}

std::vector<DatasetItem> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset " + path.string());

  std::vector<DatasetItem> items;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_copy(line).empty()) continue;

    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(path.string() + ": line " + std::to_string(line_no) +
                         ": " + e.what());
    }
    if (!record.is_object()) {
      throw DatasetError(path.string() + ": line " + std::to_string(line_no) +
                         ": record is not an object");
    }
    DatasetItem item;
    for (const char* field : {"id", "question", "answer"}) {
      if (!record.contains(field) || !record[field].is_string()) {
        throw DatasetError(path.string() + ": line " + std::to_string(line_no) +
                           ": missing string field '" + field + "'");
      }
    }
    item.id = record["id"].get<std::string>();
    item.question = record["question"].get<std::string>();
    item.answer = record["answer"].get<std::string>();
    if (record.contains("subject")) {
      if (!record["subject"].is_string()) {
        throw DatasetError(path.string() + ": line " + std::to_string(line_no) +
                           ": field 'subject' is not a string");
      }
      item.subject = record["subject"].get<std::string>();
    }
    if (!seen.insert(item.id).second) {
      throw DatasetError(path.string() + ": line " + std::to_string(line_no) +
                         ": duplicate id '" + item.id + "'");
    }
    items.push_back(std::move(item));
  }
  if (items.empty()) throw DatasetError(path.string() + ": no records");
  return items;
}

ToolUsageStats tool_usage(const std::vector<Episode>& episodes) {
  ToolUsageStats stats;
  stats.tools = all_tools();

  const std::size_t n_tools = stats.tools.size();
  std::vector<std::vector<double>> indicators(n_tools);
  for (auto& column : indicators) column.reserve(episodes.size());

  for (const Episode& episode : episodes) {
    std::set<std::string> used;
    for (const TraceEvent& event : episode.events) {
      if (event.kind != EventKind::tool_call) continue;
      if (event.payload.contains("tool") && event.payload["tool"].is_string()) {
        used.insert(event.payload["tool"].get<std::string>());
      }
    }
    for (std::size_t i = 0; i < n_tools; ++i) {
      const bool hit = used.count(std::string(to_string(stats.tools[i]))) > 0;
      indicators[i].push_back(hit ? 1.0 : 0.0);
    }
  }

  for (std::size_t i = 0; i < n_tools; ++i) {
    double count = 0.0;
    for (double v : indicators[i]) count += v;
    const double denom = episodes.empty() ? 1.0 : static_cast<double>(episodes.size());
    stats.per_tool_frequency[stats.tools[i]] = 100.0 * count / denom;
  }

  stats.correlation.assign(n_tools, std::vector<std::optional<double>>(n_tools));
  for (std::size_t i = 0; i < n_tools; ++i) {
    for (std::size_t j = 0; j < n_tools; ++j) {
      if (i == j) {
        stats.correlation[i][j] = 1.0;
      } else if (episodes.size() >= 2) {
        stats.correlation[i][j] = pearson(indicators[i], indicators[j]);
      }
    }
  }
  return stats;
}

namespace {

// Writes episode lines in job order, buffering out-of-order completions so
// the file is byte-identical regardless of worker interleaving.
class SequencedWriter {
 public:
  explicit SequencedWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw ReportError("cannot write " + path.string());
  }

  void push(int job, std::string line) {
    std::lock_guard<std::mutex> lock(mutex_);
    pending_.emplace(job, std::move(line));
    while (!pending_.empty() && pending_.begin()->first == next_) {
      out_ << pending_.begin()->second << '\n';
      pending_.erase(pending_.begin());
      ++next_;
    }
    out_.flush();
  }

 private:
  std::mutex mutex_;
  std::map<int, std::string> pending_;
  int next_ = 0;
  std::ofstream out_;
};

std::map<std::pair<std::string, int>, Episode> read_existing_episodes(
    const std::filesystem::path& path) {
  std::map<std::pair<std::string, int>, Episode> existing;
  std::ifstream in(path);
  if (!in) return existing;
  std::string line;
  while (std::getline(in, line)) {
    if (trim_copy(line).empty()) continue;
    try {
      Episode episode = episode_from_jsonl(line);
      existing[{episode.question_id, episode.repetition}] = std::move(episode);
    } catch (const Error&) {
      // A torn final line from an interrupted run is not worth failing over.
    }
  }
  return existing;
}

}  // namespace

EvalResult run_eval(const std::vector<DatasetItem>& items,
                    const EvalOptions& options, const OrchestratorDeps& deps) {
  if (items.empty()) throw DatasetError("dataset is empty");
  if (options.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  {
    const auto violations = validate_run_config(options.config);
    if (!violations.empty()) throw ConfigError(violations.front());
  }

  const int reps = options.repetitions;
  const int total = static_cast<int>(items.size()) * reps;

  std::filesystem::create_directories(options.out_dir);
  const auto episodes_path = options.out_dir / "episodes.jsonl";
  const auto part_path = options.out_dir / "episodes.jsonl.part";

  // Per-job run config; repetitions get distinct seeds when one is set.
  const auto config_for = [&](int rep) {
    RunConfig config = options.config;
    if (config.sampling.seed) *config.sampling.seed += static_cast<std::uint64_t>(rep);
    return config;
  };

  std::map<std::pair<std::string, int>, Episode> resumed;
  if (options.resume) {
    resumed = read_existing_episodes(episodes_path);
    for (auto& [key, episode] : read_existing_episodes(part_path)) {
      resumed[key] = std::move(episode);
    }
  }

  std::vector<Episode> episodes(static_cast<std::size_t>(total));
  std::vector<unsigned char> have(static_cast<std::size_t>(total), 0);

  for (int k = 0; k < total; ++k) {
    const DatasetItem& item = items[static_cast<std::size_t>(k / reps)];
    const int rep = k % reps;
    const auto it = resumed.find({item.id, rep});
    if (it == resumed.end()) continue;
    if (it->second.run_config != config_for(rep)) continue;
    episodes[static_cast<std::size_t>(k)] = it->second;
    have[static_cast<std::size_t>(k)] = 1;
  }

  SequencedWriter writer(part_path);
  for (int k = 0; k < total; ++k) {
    if (have[static_cast<std::size_t>(k)]) {
      writer.push(k, to_jsonl(episodes[static_cast<std::size_t>(k)]));
    }
  }

  std::vector<unsigned char> correct(static_cast<std::size_t>(total), 0);

  std::atomic<int> next_job{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  const auto failed = [&]() {
    std::lock_guard<std::mutex> lock(error_mutex);
    return static_cast<bool>(first_error);
  };

  const auto run_job = [&](int k) {
    const DatasetItem& item = items[static_cast<std::size_t>(k / reps)];
    const int rep = k % reps;

    Episode& episode = episodes[static_cast<std::size_t>(k)];
    std::unique_ptr<ScriptedBackend> scripted;
    LlmGateway* gateway = &deps.gateway;
    if (!have[static_cast<std::size_t>(k)]) {
      EpisodeRequest request;
      request.question_id = item.id;
      request.repetition = rep;
      request.question = item.question;
      request.config = config_for(rep);
      if (options.scripts != nullptr) {
        scripted = options.scripts->open(item.id);
        gateway = scripted.get();
        OrchestratorDeps local{*scripted, deps.catalog, deps.executor,
                               deps.model, deps.send_top_k};
        episode = run_episode(request, local);
      } else {
        episode = run_episode(request, deps);
      }
      writer.push(k, to_jsonl(episode));
    }

    if (episode.outcome == Outcome::answered && episode.final_answer) {
      LlmGateway* judge_gateway =
          options.grade_mode == GradeMode::judge ? gateway : nullptr;
      const GradeVerdict verdict =
          grade(episode.final_answer->normalized, item.answer,
                options.grade_mode, judge_gateway, deps.catalog, deps.model);
      correct[static_cast<std::size_t>(k)] = verdict.correct ? 1 : 0;
    }
  };

  const auto worker = [&]() {
    for (;;) {
      const int k = next_job.fetch_add(1);
      if (k >= total || failed()) return;
      try {
        run_job(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int n_workers = std::max(1, std::min(options.concurrency, total));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();
  if (first_error) std::rethrow_exception(first_error);

  std::filesystem::rename(part_path, episodes_path);

  EvalResult result;
  result.total_episodes = total;

  std::vector<std::vector<bool>> matrix(
      static_cast<std::size_t>(reps),
      std::vector<bool>(items.size(), false));
  for (int k = 0; k < total; ++k) {
    const int q = k / reps;
    const int rep = k % reps;
    matrix[static_cast<std::size_t>(rep)][static_cast<std::size_t>(q)] =
        correct[static_cast<std::size_t>(k)] != 0;

    const Episode& episode = episodes[static_cast<std::size_t>(k)];
    if (episode.outcome == Outcome::answered) {
      ++result.completed_episodes;
    } else if (episode.outcome == Outcome::gateway_error) {
      ++result.errored_episodes;
      result.errored_ids.push_back(episode.question_id + "#" +
                                   std::to_string(rep));
    }
  }

  result.summary = pass_at_1(matrix);
  for (const auto& row : matrix) {
    double hits = 0.0;
    for (bool b : row) hits += b ? 1.0 : 0.0;
    result.per_repetition_accuracy.push_back(100.0 * hits /
                                             static_cast<double>(row.size()));
  }
  result.usage = tool_usage(episodes);

  std::ofstream summary_out(options.out_dir / "summary.json");
  if (!summary_out) {
    throw ReportError("cannot write " + (options.out_dir / "summary.json").string());
  }
  summary_out << summary_to_json(result, options).dump(2) << '\n';
  return result;
}

namespace {

std::string strategy_label(const RunConfig& config) {
  std::string label(to_string(config.strategy));
  if (config.strategy == Strategy::single_tool && config.single_tool) {
    label += ":";
    label += to_string(*config.single_tool);
  }
  return label;
}

}  // namespace

nlohmann::json summary_to_json(const EvalResult& result,
                               const EvalOptions& options) {
  nlohmann::json usage;
  usage["tools"] = nlohmann::json::array();
  usage["frequency"] = nlohmann::json::object();
  for (const ToolName tool : result.usage.tools) {
    usage["tools"].push_back(std::string(to_string(tool)));
    usage["frequency"][std::string(to_string(tool))] =
        result.usage.per_tool_frequency.at(tool);
  }
  usage["correlation"] = nlohmann::json::array();
  for (const auto& row : result.usage.correlation) {
    nlohmann::json out_row = nlohmann::json::array();
    for (const auto& cell : row) {
      if (cell) {
        out_row.push_back(*cell);
      } else {
        out_row.push_back(nullptr);
      }
    }
    usage["correlation"].push_back(std::move(out_row));
  }

  nlohmann::json summary{
      {"record", "summary"},
      {"dataset", options.dataset_name},
      {"model", options.model},
      {"strategy", strategy_label(options.config)},
      {"grade_mode", std::string(to_string(options.grade_mode))},
      {"repetitions", result.summary.repetitions},
      {"n_questions", result.summary.n_questions},
      {"mean_pass1", result.summary.mean_pass1},
      {"std_error", result.summary.std_error},
      {"per_repetition_accuracy", result.per_repetition_accuracy},
      {"completed_episodes", result.completed_episodes},
      {"errored_episodes", result.errored_episodes},
      {"total_episodes", result.total_episodes},
      {"errored_ids", result.errored_ids},
      {"tool_usage", std::move(usage)},
  };
  return summary;
}

std::string format_summary_table(const nlohmann::json& summary) {
  std::ostringstream out;
  const auto str = [&](const char* key) {
    return summary.value(key, std::string("?"));
  };

  out << "Dataset:     " << str("dataset") << '\n';
  out << "Model:       " << str("model") << '\n';
  out << "Strategy:    " << str("strategy") << '\n';
  out << "Grade mode:  " << str("grade_mode") << '\n';
  const int reps = summary.value("repetitions", 0);
  const int questions = summary.value("n_questions", 0);
  out << "Episodes:    " << reps * questions << " (" << reps
      << " repetitions x " << questions << " questions)\n";
  const int errored = summary.value("errored_episodes", 0);
  if (errored > 0) out << "Errored:     " << errored << '\n';
  out << "pass@1:      " << fixed(summary.value("mean_pass1", 0.0), 1) << " ± "
      << fixed(summary.value("std_error", 0.0), 1) << '\n';

  if (!summary.contains("tool_usage")) return out.str();
  const auto& usage = summary["tool_usage"];
  if (!usage.contains("tools") || usage["tools"].empty()) return out.str();

  std::vector<std::string> tools;
  for (const auto& tool : usage["tools"]) tools.push_back(tool.get<std::string>());
  std::size_t name_width = 4;
  for (const auto& tool : tools) name_width = std::max(name_width, tool.size());

  out << "\nTool usage (% of episodes):\n";
  for (const auto& tool : tools) {
    const double frequency = usage["frequency"].value(tool, 0.0);
    out << "  " << pad_right(tool, name_width) << "  "
        << pad_left(fixed(frequency, 1), 5) << '\n';
  }

  if (!usage.contains("correlation")) return out.str();
  out << "\nTool co-use correlation:\n";
  out << "  " << pad_right("", name_width);
  for (const auto& tool : tools) out << "  " << pad_left(tool.substr(0, 6), 6);
  out << '\n';
  const auto& matrix = usage["correlation"];
  for (std::size_t i = 0; i < tools.size() && i < matrix.size(); ++i) {
    out << "  " << pad_right(tools[i], name_width);
    for (std::size_t j = 0; j < tools.size() && j < matrix[i].size(); ++j) {
      const auto& cell = matrix[i][j];
      out << "  " << pad_left(cell.is_null() ? "—" : fixed(cell.get<double>(), 2), 6);
    }
    out << '\n';
  }
  return out.str();
}

CompareRow compare_reports(const nlohmann::json& report_a,
                           const nlohmann::json& report_b) {
  const std::string dataset_a = report_a.value("dataset", std::string());
  const std::string dataset_b = report_b.value("dataset", std::string());
  if (dataset_a != dataset_b) {
    throw ReportError("reports cover different datasets: '" + dataset_a +
                      "' vs '" + dataset_b + "'");
  }

  const auto accuracies = [](const nlohmann::json& report) {
    if (!report.contains("per_repetition_accuracy") ||
        !report["per_repetition_accuracy"].is_array()) {
      throw ReportError("report lacks per_repetition_accuracy");
    }
    std::vector<double> values;
    for (const auto& v : report["per_repetition_accuracy"]) {
      values.push_back(v.get<double>());
    }
    return values;
  };

  const std::vector<double> a = accuracies(report_a);
  const std::vector<double> b = accuracies(report_b);
  const WelchResult welch = welch_t_test(a, b);

  const auto mean = [](const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
  };

  CompareRow row;
  row.dataset = dataset_a;
  row.t = welch.t;
  row.dof = welch.dof;
  row.p = welch.p;
  row.significant = welch.p < 0.05;
  row.mean_a = mean(a);
  row.mean_b = mean(b);
  return row;
}

std::string format_compare_table(const std::vector<CompareRow>& rows) {
  std::ostringstream out;
  std::size_t name_width = 7;
  for (const auto& row : rows) name_width = std::max(name_width, row.dataset.size());

  out << pad_right("dataset", name_width) << "  " << pad_left("mean_a", 8) << "  "
      << pad_left("mean_b", 8) << "  " << pad_left("t", 9) << "  "
      << pad_left("dof", 9) << "  " << pad_left("p", 10) << '\n';
  for (const auto& row : rows) {
    out << pad_right(row.dataset, name_width) << "  "
        << pad_left(fixed(row.mean_a, 2), 8) << "  "
        << pad_left(fixed(row.mean_b, 2), 8) << "  "
        << pad_left(fixed(row.t, 3), 9) << "  "
        << pad_left(fixed(row.dof, 3), 9) << "  "
        << pad_left(compact(row.p), 10) << (row.significant ? " *" : "") << '\n';
  }
  return out.str();
}

}  // namespace cogtools
