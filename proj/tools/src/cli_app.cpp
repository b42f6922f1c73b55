#include "cli_app.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cogtools/code_executor.hpp"
#include "cogtools/errors.hpp"
#include "cogtools/evaluation.hpp"
#include "cogtools/gateway.hpp"
#include "cogtools/kv_config.hpp"
#include "cogtools/orchestrator.hpp"
#include "cogtools/prompt_catalog.hpp"
#include "cogtools/run_config.hpp"

namespace cogtools::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;
constexpr int kExitGateway = 3;

std::string env_or_empty(const char* name) {
  const char* value = std::getenv(name);
  return value ? value : "";
}

// flags > env > config file > default.
std::string resolve(const CLI::Option* flag, const std::string& flag_value,
                    const char* env_name, const KvConfig& config,
                    const std::string& config_key, std::string fallback) {
  if (flag != nullptr && flag->count() > 0) return flag_value;
  if (env_name != nullptr) {
    const std::string from_env = env_or_empty(env_name);
    if (!from_env.empty()) return from_env;
  }
  if (const auto from_config = config.get(config_key)) return *from_config;
  return fallback;
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  std::string word;
  while (in >> word) words.push_back(word);
  return words;
}

struct StrategyChoice {
  Strategy strategy = Strategy::cognitive_tools;
  std::optional<ToolName> single_tool;
};

StrategyChoice parse_strategy(const std::string& text) {
  StrategyChoice choice;
  std::string name = text;
  if (name.rfind("single_tool:", 0) == 0) {
    const std::string tool_text = name.substr(std::string("single_tool:").size());
    const auto tool = tool_name_from_string(tool_text);
    if (!tool) {
      throw ConfigError("unknown tool '" + tool_text +
                        "' in --strategy single_tool:<name>");
    }
    choice.strategy = Strategy::single_tool;
    choice.single_tool = *tool;
    return choice;
  }
  const auto strategy = strategy_from_string(name);
  if (!strategy) {
    throw ConfigError(
        "unknown strategy '" + name +
        "' (valid: baseline, cot, code_only, cognitive_prompting, "
        "cognitive_tools, single_tool:<tool>)");
  }
  if (*strategy == Strategy::single_tool) {
    throw ConfigError("single_tool needs a tool, e.g. single_tool:use_code");
  }
  choice.strategy = *strategy;
  return choice;
}

const std::set<std::string> kKnownConfigKeys = {
    "model",
    "base_url",
    "strategy",
    "max_steps",
    "sampling.temperature",
    "sampling.top_p",
    "code.interpreter",
    "code.timeout_secs",
    "code.output_cap_bytes",
    "code.max_concurrency",
    "code.isolate_network",
};

KvConfig load_config_file(const std::string& path) {
  if (path.empty()) return KvConfig();
  KvConfig config = KvConfig::load(path);
  for (const auto& [key, value] : config.values()) {
    (void)value;
    if (kKnownConfigKeys.count(key) == 0) {
      throw ConfigError("unknown config key '" + key + "' in " + path);
    }
  }
  return config;
}

CodeExecutor::Options executor_options(const KvConfig& config) {
  CodeExecutor::Options options;
  if (const auto interpreter = config.get("code.interpreter")) {
    options.interpreter = split_words(*interpreter);
  }
  if (const auto secs = config.get_int("code.timeout_secs")) {
    options.limits.timeout = std::chrono::seconds(*secs);
  }
  if (const auto cap = config.get_int("code.output_cap_bytes")) {
    options.limits.output_cap_bytes = static_cast<std::size_t>(*cap);
  }
  if (const auto workers = config.get_int("code.max_concurrency")) {
    options.max_concurrency = static_cast<int>(*workers);
  }
  if (const auto isolate = config.get_bool("code.isolate_network")) {
    options.isolate_network = *isolate;
  }
  return options;
}

// Flags shared by ask and eval; resolution happens after parsing.
struct CommonFlags {
  std::string model;
  std::string base_url;
  std::string config_path;
  std::string prompts_dir;
  std::string scripted_path;
  std::string strategy_text;
  bool allow_prompt_edits = false;
  bool send_top_k = false;
  bool no_motivation = false;
  int max_steps = 0;
  std::uint64_t seed = 0;

  CLI::Option* model_opt = nullptr;
  CLI::Option* base_url_opt = nullptr;
  CLI::Option* strategy_opt = nullptr;
  CLI::Option* max_steps_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App* cmd) {
    model_opt = cmd->add_option("--model", model, "Model identifier for the backend");
    base_url_opt = cmd->add_option("--base-url", base_url,
                                   "OpenAI-compatible server base URL");
    cmd->add_option("--config", config_path, "key=value config file");
    cmd->add_option("--prompts", prompts_dir,
                    "Load prompt templates from this directory");
    cmd->add_flag("--allow-prompt-edits", allow_prompt_edits,
                  "Accept prompt files whose digests differ from the builtin set");
    cmd->add_option("--scripted", scripted_path,
                    "Replay against a scripted backend fixture instead of a server");
    strategy_opt = cmd->add_option("--strategy", strategy_text,
                                   "baseline | cot | code_only | cognitive_prompting | "
                                   "cognitive_tools | single_tool:<tool>");
    cmd->add_flag("--no-motivation", no_motivation,
                  "Use the system prompt variant without motivational cues");
    cmd->add_flag("--send-top-k", send_top_k, "Send top_k sampling on the wire");
    max_steps_opt = cmd->add_option("--max-steps", max_steps, "Main-loop step budget");
    seed_opt = cmd->add_option("--seed", seed, "Sampling seed (repetition r adds r)");
  }
};

struct Resolved {
  KvConfig file;
  std::string model;
  std::string base_url;
  std::string api_key;
  RunConfig run;
  const PromptCatalog* catalog = nullptr;
  std::unique_ptr<PromptCatalog> owned_catalog;
  std::unique_ptr<ScriptLibrary> scripts;
};

Resolved resolve_common(const CommonFlags& flags) {
  Resolved out;
  out.file = load_config_file(flags.config_path);

  out.model = resolve(flags.model_opt, flags.model, "LLM_MODEL", out.file,
                      "model", "default");
  out.base_url = resolve(flags.base_url_opt, flags.base_url, "LLM_BASE_URL",
                         out.file, "base_url", "http://localhost:8000");
  out.api_key = env_or_empty("LLM_API_KEY");

  const std::string strategy_text =
      resolve(flags.strategy_opt, flags.strategy_text, nullptr, out.file,
              "strategy", "cognitive_tools");
  const StrategyChoice choice = parse_strategy(strategy_text);
  out.run.strategy = choice.strategy;
  out.run.single_tool = choice.single_tool;
  out.run.motivational_cues = !flags.no_motivation;
  out.run.sampling = default_sampling(out.model);
  if (const auto temperature = out.file.get_double("sampling.temperature")) {
    out.run.sampling.temperature = *temperature;
  }
  if (const auto top_p = out.file.get_double("sampling.top_p")) {
    out.run.sampling.top_p = *top_p;
  }
  if (flags.seed_opt != nullptr && flags.seed_opt->count() > 0) {
    out.run.sampling.seed = flags.seed;
  }
  if (flags.max_steps_opt != nullptr && flags.max_steps_opt->count() > 0) {
    out.run.max_steps = flags.max_steps;
  } else if (const auto steps = out.file.get_int("max_steps")) {
    out.run.max_steps = static_cast<int>(*steps);
  }

  if (flags.prompts_dir.empty()) {
    out.catalog = &PromptCatalog::builtin();
  } else {
    out.owned_catalog = std::make_unique<PromptCatalog>(
        PromptCatalog::load_dir(flags.prompts_dir, flags.allow_prompt_edits));
    out.catalog = out.owned_catalog.get();
  }

  if (!flags.scripted_path.empty()) {
    out.scripts =
        std::make_unique<ScriptLibrary>(ScriptLibrary::from_file(flags.scripted_path));
  }
  return out;
}

std::string event_line(const TraceEvent& event) {
  std::ostringstream out;
  out << '[' << event.seq << "] " << to_string(event.kind);
  const auto str = [&](const char* key) {
    return event.payload.value(key, std::string());
  };
  switch (event.kind) {
    case EventKind::llm_request:
      out << ' ' << str("purpose");
      if (event.payload.contains("step")) out << " step=" << event.payload["step"];
      if (event.payload.contains("tool")) out << " tool=" << str("tool");
      out << " messages=" << event.payload.value("message_count", 0);
      break;
    case EventKind::llm_response:
      out << ' ' << str("purpose");
      if (event.payload.contains("error")) {
        out << " error: " << str("error");
      } else {
        out << " finish=" << str("finish_reason") << " chars="
            << event.payload.value("content", std::string()).size();
      }
      break;
    case EventKind::tool_call: {
      out << ' ' << str("tool") << '(';
      bool first = true;
      if (event.payload.contains("arguments")) {
        for (const auto& [key, value] : event.payload["arguments"].items()) {
          (void)value;
          out << (first ? "" : ", ") << key;
          first = false;
        }
      }
      out << ')';
      break;
    }
    case EventKind::tool_result:
      out << ' ' << str("tool");
      if (event.payload.value("error", false)) out << " error";
      out << " chars=" << event.payload.value("observation", std::string()).size();
      break;
    case EventKind::code_execution:
      out << " attempt=" << event.payload.value("attempt", 0) << ' '
          << str("exit_status");
      break;
    case EventKind::parse_failure:
      out << ' ' << str("reason");
      break;
    case EventKind::answer:
      out << ' ' << str("normalized");
      break;
  }
  return out.str();
}

int cmd_ask(const CommonFlags& flags, const std::string& question, bool quiet,
            const std::string& out_dir) {
  Resolved resolved = resolve_common(flags);
  {
    const auto violations = validate_run_config(resolved.run);
    if (!violations.empty()) throw ConfigError(violations.front());
  }

  CodeExecutor executor(executor_options(resolved.file));
  if (enabled_tools(resolved.run).count(ToolName::use_code) > 0) {
    executor.probe();
  }

  std::unique_ptr<ScriptedBackend> scripted;
  std::unique_ptr<HttpGateway> http;
  LlmGateway* gateway = nullptr;
  if (resolved.scripts) {
    scripted = resolved.scripts->open("ask");
    gateway = scripted.get();
  } else {
    HttpGatewayOptions options;
    options.base_url = resolved.base_url;
    options.api_key = resolved.api_key;
    http = std::make_unique<HttpGateway>(options);
    gateway = http.get();
  }

  OrchestratorDeps deps{*gateway, *resolved.catalog, executor, resolved.model,
                        flags.send_top_k};
  EpisodeRequest request;
  request.question_id = "ask";
  request.question = question;
  request.config = resolved.run;

  EpisodeBuilder::LiveSink sink;
  if (!quiet) {
    sink = [](const TraceEvent& event) { std::cerr << event_line(event) << '\n'; };
  }
  const Episode episode = run_episode(request, deps, sink);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(std::filesystem::path(out_dir) / "episodes.jsonl");
    out << to_jsonl(episode) << '\n';
  }

  if (episode.outcome == Outcome::answered) {
    std::cout << "ANSWER: " << episode.final_answer->raw << std::endl;
    return kExitOk;
  }
  std::cerr << "no answer: " << to_string(episode.outcome) << '\n';
  return episode.outcome == Outcome::gateway_error ? kExitGateway : kExitPartial;
}

int cmd_eval(const CommonFlags& flags, const std::string& dataset_path,
             int repetitions, int concurrency, const std::string& out_dir,
             bool resume, const std::string& grade_mode_text) {
  Resolved resolved = resolve_common(flags);

  const std::vector<DatasetItem> items = load_dataset(dataset_path);
  const std::string dataset_name =
      std::filesystem::path(dataset_path).stem().string();

  EvalOptions options;
  options.dataset_name = dataset_name;
  options.repetitions = repetitions;
  options.concurrency = concurrency;
  options.config = resolved.run;
  options.model = resolved.model;
  options.out_dir = out_dir;
  options.resume = resume;
  options.scripts = resolved.scripts.get();
  if (grade_mode_text == "auto") {
    options.grade_mode = default_grade_mode(dataset_name);
  } else {
    const auto mode = grade_mode_from_string(grade_mode_text);
    if (!mode) {
      throw ConfigError("unknown grade mode '" + grade_mode_text +
                        "' (valid: auto, parse, judge)");
    }
    options.grade_mode = *mode;
  }

  CodeExecutor executor(executor_options(resolved.file));
  if (enabled_tools(resolved.run).count(ToolName::use_code) > 0) {
    executor.probe();
  }

  std::unique_ptr<ScriptedBackend> dummy;
  std::unique_ptr<HttpGateway> http;
  LlmGateway* gateway = nullptr;
  if (resolved.scripts) {
    dummy = std::make_unique<ScriptedBackend>(std::vector<ScriptStep>());
    gateway = dummy.get();
  } else {
    HttpGatewayOptions gateway_options;
    gateway_options.base_url = resolved.base_url;
    gateway_options.api_key = resolved.api_key;
    gateway_options.max_in_flight = std::max(8, concurrency);
    http = std::make_unique<HttpGateway>(gateway_options);
    gateway = http.get();
  }
  OrchestratorDeps deps{*gateway, *resolved.catalog, executor, resolved.model,
                        flags.send_top_k};

  const EvalResult result = run_eval(items, options, deps);
  std::cout << format_summary_table(summary_to_json(result, options));
  std::cerr << "wrote " << (options.out_dir / "episodes.jsonl").string() << " and "
            << (options.out_dir / "summary.json").string() << '\n';

  if (result.errored_episodes * 10 > result.total_episodes) {
    std::cerr << result.errored_episodes << '/' << result.total_episodes
              << " episodes hit gateway errors:";
    for (const auto& id : result.errored_ids) std::cerr << ' ' << id;
    std::cerr << '\n';
    return kExitPartial;
  }
  return kExitOk;
}

nlohmann::json load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ReportError("cannot open report " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(path + ": " + e.what());
  }
}

int cmd_compare(const std::string& path_a, const std::string& path_b) {
  const CompareRow row = compare_reports(load_report(path_a), load_report(path_b));
  std::cout << format_compare_table({row});
  return kExitOk;
}

int cmd_prompts_export(const CommonFlags& flags, const std::string& dir) {
  Resolved resolved = resolve_common(flags);
  resolved.catalog->export_dir(dir);
  std::cout << "wrote " << kTemplateCount << " templates to " << dir << '\n';
  return kExitOk;
}

int cmd_prompts_verify(const std::string& dir) {
  try {
    PromptCatalog::load_dir(dir, /*allow_edits=*/false);
  } catch (const PromptError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPartial;
  }
  std::cout << kTemplateCount << " templates match the builtin manifest\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Cognitive-tools reasoning engine"};
  app.require_subcommand(1);

  // ask
  auto* ask = app.add_subcommand("ask", "Run one question and print the answer");
  CommonFlags ask_flags;
  ask_flags.attach(ask);
  std::string question;
  bool quiet = false;
  std::string ask_out;
  ask->add_option("question", question, "The question to solve")->required();
  ask->add_flag("--quiet", quiet, "Do not stream trace events to stderr");
  ask->add_option("--out", ask_out, "Also write the episode record to this directory");

  // eval
  auto* eval = app.add_subcommand("eval", "Run a benchmark sweep and write reports");
  CommonFlags eval_flags;
  eval_flags.attach(eval);
  std::string dataset_path;
  int repetitions = 16;
  int concurrency = 4;
  std::string eval_out = "eval_out";
  bool resume = false;
  std::string grade_mode_text = "auto";
  eval->add_option("dataset", dataset_path, "Line-delimited dataset file")->required();
  eval->add_option("--repetitions", repetitions, "Independent repetitions per question");
  eval->add_option("--concurrency", concurrency, "Concurrent episodes");
  eval->add_option("--out", eval_out, "Output directory");
  eval->add_flag("--resume", resume, "Keep episodes already recorded in the output");
  eval->add_option("--grade-mode", grade_mode_text, "auto | parse | judge");

  // compare
  auto* compare = app.add_subcommand("compare", "Welch's t-test between two reports");
  std::string report_a;
  std::string report_b;
  compare->add_option("report_a", report_a, "First summary.json")->required();
  compare->add_option("report_b", report_b, "Second summary.json")->required();

  // prompts
  auto* prompts = app.add_subcommand("prompts", "Inspect or export prompt templates");
  prompts->require_subcommand(1);
  auto* prompts_export = prompts->add_subcommand("export", "Write templates to a directory");
  CommonFlags export_flags;
  export_flags.attach(prompts_export);
  std::string export_dir;
  prompts_export->add_option("dir", export_dir, "Target directory")->required();
  auto* prompts_verify =
      prompts->add_subcommand("verify", "Check a directory against the builtin digests");
  std::string verify_dir = "prompts";
  prompts_verify->add_option("dir", verify_dir, "Directory to verify");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (ask->parsed()) return cmd_ask(ask_flags, question, quiet, ask_out);
    if (eval->parsed()) {
      return cmd_eval(eval_flags, dataset_path, repetitions, concurrency,
                      eval_out, resume, grade_mode_text);
    }
    if (compare->parsed()) return cmd_compare(report_a, report_b);
    if (prompts->parsed()) {
      if (prompts_export->parsed()) return cmd_prompts_export(export_flags, export_dir);
      if (prompts_verify->parsed()) return cmd_prompts_verify(verify_dir);
    }
  } catch (const GatewayError& e) {
    std::cerr << "gateway error: " << e.what() << '\n';
    return kExitGateway;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPartial;
  }
  return kExitConfig;
}

}  // namespace cogtools::cli
