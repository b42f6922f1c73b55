#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <string>
#include <vector>

#include "cogtools/errors.hpp"
#include "cogtools/orchestrator.hpp"

using namespace cogtools;

namespace {

const std::string kFixtures = COGTOOLS_FIXTURES;

RunConfig config_for(Strategy strategy) {
  RunConfig config;
  config.strategy = strategy;
  return config;
}

struct Harness {
  CodeExecutor executor{CodeExecutor::Options{}};

  Episode run(ScriptedBackend& backend, const std::string& question,
              const RunConfig& config, EpisodeBuilder::LiveSink live = nullptr) {
    OrchestratorDeps deps{backend, PromptCatalog::builtin(), executor,
                          "test-model", false};
    EpisodeRequest request;
    request.question_id = "q";
    request.question = question;
    request.config = config;
    return run_episode(request, deps, std::move(live));
  }
};

std::vector<std::string> tool_call_sequence(const Episode& episode) {
  std::vector<std::string> tools;
  for (const TraceEvent& e : episode.events) {
    if (e.kind == EventKind::tool_call) {
      tools.push_back(e.payload.at("tool").get<std::string>());
    }
  }
  return tools;
}

int count_kind(const Episode& episode, EventKind kind) {
  int n = 0;
  for (const TraceEvent& e : episode.events) {
    if (e.kind == kind) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("enabled_tools per strategy") {
  CHECK(enabled_tools(config_for(Strategy::baseline)).empty());
  CHECK(enabled_tools(config_for(Strategy::cot)).empty());
  CHECK(enabled_tools(config_for(Strategy::cognitive_prompting)).empty());
  CHECK(enabled_tools(config_for(Strategy::code_only)) ==
        std::set<ToolName>{ToolName::use_code});
  CHECK(enabled_tools(config_for(Strategy::cognitive_tools)).size() ==
        static_cast<std::size_t>(kToolCount));

  RunConfig single = config_for(Strategy::single_tool);
  CHECK_THROWS_AS(enabled_tools(single), ConfigError);
  single.single_tool = ToolName::backtracking;
  CHECK(enabled_tools(single) == std::set<ToolName>{ToolName::backtracking});
}

TEST_CASE("initial transcripts per strategy") {
  const PromptCatalog& catalog = PromptCatalog::builtin();
  const std::string question = "What is 17 + 25?";

  SUBCASE("baseline") {
    Transcript t =
        build_initial_transcript(question, config_for(Strategy::baseline), catalog);
    REQUIRE(t.messages.size() == 2);
    CHECK(t.messages[0].role == Role::system);
    CHECK(t.messages[0].content == kDefaultSystemPrompt);
    CHECK(t.messages[1].role == Role::user);
    CHECK(t.messages[1].content ==
          "Solve the math problem: 'What is 17 + 25?'");
    CHECK(validate_transcript(t).empty());
  }

  SUBCASE("cot appends the step-by-step cue") {
    Transcript t =
        build_initial_transcript(question, config_for(Strategy::cot), catalog);
    CHECK(t.messages[1].content ==
          "Solve the math problem: 'What is 17 + 25?'\nThink step by step.");
  }

  SUBCASE("cognitive_prompting front-loads the procedure list") {
    Transcript t = build_initial_transcript(
        question, config_for(Strategy::cognitive_prompting), catalog);
    CHECK(t.messages[0].content == kDefaultSystemPrompt);
    const std::string& body =
        catalog.get(TemplateId::cognitive_prompting).body;
    CHECK(t.messages[1].content == body + "\n\n" + question);
  }

  SUBCASE("cognitive_tools installs the tools system prompt verbatim") {
    Transcript t = build_initial_transcript(
        question, config_for(Strategy::cognitive_tools), catalog);
    const std::string want = catalog.render(
        TemplateId::cognitive_tools_system,
        {{"cognitive_tools_signature",
          PromptCatalog::tool_signature_block(all_tools())}});
    CHECK(t.messages[0].content == want);
    CHECK(t.messages[1].content == question);  // bare question, no prefix
    CHECK(t.messages[0].content.find("$1,000,000") != std::string::npos);
  }

  SUBCASE("no-motivation variant") {
    RunConfig config = config_for(Strategy::cognitive_tools);
    config.motivational_cues = false;
    Transcript t = build_initial_transcript(question, config, catalog);
    CHECK(t.messages[0].content.find("$1,000,000") == std::string::npos);
    CHECK(t.messages[0].content.find("Don't give up!") == std::string::npos);
    CHECK(t.messages[0].content.find("Now Begin!") != std::string::npos);
  }

  SUBCASE("code_only lists only the code tool") {
    Transcript t = build_initial_transcript(
        question, config_for(Strategy::code_only), catalog);
    CHECK(t.messages[0].content.find("Tool: use_code") != std::string::npos);
    CHECK(t.messages[0].content.find("Tool: understand_question") ==
          std::string::npos);
  }

  SUBCASE("single_tool lists exactly the chosen tool") {
    RunConfig config = config_for(Strategy::single_tool);
    config.single_tool = ToolName::backtracking;
    Transcript t = build_initial_transcript(question, config, catalog);
    CHECK(t.messages[0].content.find("Tool: backtracking") != std::string::npos);
    CHECK(t.messages[0].content.find("Tool: use_code") == std::string::npos);
  }

  SUBCASE("invalid configs are rejected") {
    RunConfig config = config_for(Strategy::single_tool);  // no tool chosen
    CHECK_THROWS_AS(build_initial_transcript(question, config, catalog),
                    ConfigError);
    config = config_for(Strategy::baseline);
    config.max_steps = 0;
    CHECK_THROWS_AS(build_initial_transcript(question, config, catalog),
                    ConfigError);
  }
}

TEST_CASE("immediate answer finishes in one step with no tools") {
  Harness h;
  ScriptedBackend backend({{"", std::nullopt, "ANSWER: 42"}});
  Episode episode = h.run(backend, "What is 6 x 7?",
                          config_for(Strategy::cognitive_tools));
  CHECK(episode.outcome == Outcome::answered);
  REQUIRE(episode.final_answer.has_value());
  CHECK(episode.final_answer->raw == "42");
  CHECK(episode.final_answer->normalized == "42");
  CHECK(tool_call_sequence(episode).empty());
  CHECK(count_kind(episode, EventKind::llm_request) == 1);
  CHECK(count_kind(episode, EventKind::llm_response) == 1);
  CHECK(count_kind(episode, EventKind::answer) == 1);
  CHECK(validate_episode(episode).empty());
  CHECK(episode.token_usage.prompt_tokens > 0);
  CHECK(episode.token_usage.completion_tokens > 0);
}

TEST_CASE("a never-answering backend exhausts the step budget") {
  Harness h;
  ScriptedBackend backend({
      {"", std::nullopt, "Let me think about this."},
      {kContinueNudge, Role::user, "Still thinking."},
      {kContinueNudge, Role::user, "Hmm."},
  });
  RunConfig config = config_for(Strategy::cognitive_tools);
  config.max_steps = 3;
  Episode episode = h.run(backend, "Q?", config);
  CHECK(episode.outcome == Outcome::step_budget_exhausted);
  CHECK_FALSE(episode.final_answer.has_value());
  CHECK(count_kind(episode, EventKind::llm_response) == 3);
  CHECK(backend.remaining() == 0);
  CHECK(validate_episode(episode).empty());
}

TEST_CASE("at most two nudges even with budget to spare") {
  Harness h;
  ScriptedBackend backend({
      {"", std::nullopt, "prose one"},
      {kContinueNudge, Role::user, "prose two"},
      {kContinueNudge, Role::user, "prose three"},
  });
  RunConfig config = config_for(Strategy::cognitive_tools);
  config.max_steps = 12;
  Episode episode = h.run(backend, "Q?", config);
  CHECK(episode.outcome == Outcome::step_budget_exhausted);
  CHECK(count_kind(episode, EventKind::llm_response) == 3);  // not 12
  CHECK(backend.remaining() == 0);
}

TEST_CASE("the golden trace replays end to end") {
  Harness h;
  ScriptLibrary library = ScriptLibrary::from_file(kFixtures + "/gcd_trace.json");
  auto backend = library.open("gcd");
  Episode episode = h.run(
      *backend,
      "Find the greatest common divisor of $3339$, $2961$, and $1491$.",
      config_for(Strategy::cognitive_tools));

  CHECK(episode.outcome == Outcome::answered);
  REQUIRE(episode.final_answer.has_value());
  CHECK(episode.final_answer->raw == "21");
  CHECK(tool_call_sequence(episode) ==
        std::vector<std::string>{"understand_question", "use_code",
                                 "examine_answer"});
  CHECK(count_kind(episode, EventKind::code_execution) == 1);
  CHECK(backend->remaining() == 0);
  CHECK(validate_episode(episode).empty());

  // Main-loop requests stay within the step budget; every request has a
  // response.
  int main_requests = 0;
  for (const TraceEvent& e : episode.events) {
    if (e.kind == EventKind::llm_request &&
        e.payload.at("purpose") == "main") {
      ++main_requests;
    }
  }
  CHECK(main_requests == 4);
  CHECK(main_requests <= episode.run_config.max_steps);
  CHECK(count_kind(episode, EventKind::llm_request) ==
        count_kind(episode, EventKind::llm_response));
}

TEST_CASE("replay determinism: identical script, identical bytes") {
  Harness h;
  ScriptLibrary library = ScriptLibrary::from_file(kFixtures + "/gcd_trace.json");
  const std::string question =
      "Find the greatest common divisor of $3339$, $2961$, and $1491$.";
  auto first = library.open("gcd");
  auto second = library.open("gcd");
  Episode a = h.run(*first, question, config_for(Strategy::cognitive_tools));
  Episode b = h.run(*second, question, config_for(Strategy::cognitive_tools));
  CHECK(a == b);
  CHECK(to_jsonl(a) == to_jsonl(b));
}

TEST_CASE("malformed tool arguments trigger a parse retry that can recover") {
  Harness h;
  ScriptedBackend backend({
      {"", std::nullopt, "use_code({'broken: 1})"},
      {"could not be parsed", Role::user, "ANSWER: 7"},
  });
  Episode episode = h.run(backend, "Q?", config_for(Strategy::cognitive_tools));
  CHECK(episode.outcome == Outcome::answered);
  CHECK(episode.final_answer->raw == "7");
  CHECK(count_kind(episode, EventKind::parse_failure) == 1);
  CHECK(tool_call_sequence(episode).empty());
  CHECK(backend.remaining() == 0);
}

TEST_CASE("persistent malformed calls stop after the nudge budget") {
  Harness h;
  ScriptedBackend backend({
      {"", std::nullopt, "use_code({'broken: 1})"},
      {"could not be parsed", Role::user, "use_code({'still: broken)"},
      {"could not be parsed", Role::user, "use_code({'again)"},
  });
  RunConfig config = config_for(Strategy::cognitive_tools);
  config.max_steps = 12;
  Episode episode = h.run(backend, "Q?", config);
  CHECK(episode.outcome == Outcome::step_budget_exhausted);
  CHECK(count_kind(episode, EventKind::parse_failure) == 3);
  CHECK(backend.remaining() == 0);
}

TEST_CASE("running out of script in the main loop is a gateway error") {
  Harness h;
  ScriptedBackend backend({});
  Episode episode = h.run(backend, "Q?", config_for(Strategy::cognitive_tools));
  CHECK(episode.outcome == Outcome::gateway_error);
  CHECK_FALSE(episode.final_answer.has_value());
  REQUIRE(episode.events.size() == 2);  // request + error response
  CHECK(episode.events[0].kind == EventKind::llm_request);
  CHECK(episode.events[1].kind == EventKind::llm_response);
  CHECK(episode.events[1].payload.at("finish_reason") == "error");
  CHECK(validate_episode(episode).empty());
}

TEST_CASE("a gateway failure inside a tool keeps the partial trace") {
  Harness h;
  ScriptedBackend backend({
      {"", std::nullopt, "understand_question({'question': 'Q?'})"},
      // No step for the tool sub-conversation: it will exhaust the script.
  });
  Episode episode = h.run(backend, "Q?", config_for(Strategy::cognitive_tools));
  CHECK(episode.outcome == Outcome::gateway_error);
  CHECK(tool_call_sequence(episode) ==
        std::vector<std::string>{"understand_question"});
  REQUIRE_FALSE(episode.events.empty());
  const TraceEvent& last = episode.events.back();
  CHECK(last.kind == EventKind::llm_response);
  CHECK(last.payload.at("purpose") == "tool");
  CHECK(last.payload.at("finish_reason") == "error");
  CHECK(validate_episode(episode).empty());
}

TEST_CASE("tool input errors surface as error observations, not crashes") {
  Harness h;
  ScriptedBackend backend({
      {"", std::nullopt, "examine_answer({'question': 'Q?'})"},
      {"Error:", Role::tool, "ANSWER: 9"},
  });
  RunConfig config = config_for(Strategy::single_tool);
  config.single_tool = ToolName::examine_answer;
  Episode episode = h.run(backend, "Q?", config);
  CHECK(episode.outcome == Outcome::answered);
  CHECK(episode.final_answer->raw == "9");

  bool saw_error_result = false;
  for (const TraceEvent& e : episode.events) {
    if (e.kind == EventKind::tool_result && e.payload.contains("error")) {
      saw_error_result = true;
      CHECK(e.payload.at("error") == true);
      CHECK(e.payload.at("observation").get<std::string>().rfind("Error: ", 0) ==
            0);
    }
  }
  CHECK(saw_error_result);
}

TEST_CASE("single_tool ignores calls to unregistered tools") {
  Harness h;
  ScriptedBackend backend({
      {"", std::nullopt, "Let me try recall_related({'question': 'Q?'})."},
      {kContinueNudge, Role::user, "ANSWER: 11"},
  });
  RunConfig config = config_for(Strategy::single_tool);
  config.single_tool = ToolName::understand_question;
  Episode episode = h.run(backend, "Q?", config);
  CHECK(episode.outcome == Outcome::answered);
  CHECK(tool_call_sequence(episode).empty());
  CHECK(backend.remaining() == 0);
}

TEST_CASE("an answer after a call site wins without running the tool") {
  Harness h;
  ScriptedBackend backend({
      {"", std::nullopt,
       "I could run use_code({'q': 'x'}) but I see it directly.\nANSWER: 4"},
  });
  Episode episode = h.run(backend, "Q?", config_for(Strategy::cognitive_tools));
  CHECK(episode.outcome == Outcome::answered);
  CHECK(episode.final_answer->raw == "4");
  CHECK(count_kind(episode, EventKind::tool_result) == 0);
  CHECK(count_kind(episode, EventKind::code_execution) == 0);
}

TEST_CASE("baseline strategies never emit tool calls") {
  Harness h;
  std::mt19937 rng(4242);
  const std::string tool_texts[] = {
      "use_code({'a': 'b'})",
      "print(understand_question({'question': 'x'}))",
      "```python\nexamine_answer({'question': 'x'})\n```",
      "backtracking() and recall_related({'question': 'y'})",
  };
  for (int i = 0; i < 20; ++i) {
    std::vector<ScriptStep> steps;
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int s = 0; s < n; ++s) {
      steps.push_back({"", std::nullopt,
                       "Step " + std::to_string(s) + ": " +
                           tool_texts[rng() % 4]});
    }
    ScriptedBackend backend(steps);
    RunConfig config = config_for(rng() % 2 ? Strategy::baseline
                                            : Strategy::cognitive_prompting);
    config.max_steps = n;
    Episode episode = h.run(backend, "Q?", config);
    CHECK(count_kind(episode, EventKind::tool_call) == 0);
    CHECK(count_kind(episode, EventKind::code_execution) == 0);
  }
}

TEST_CASE("the live sink streams exactly the recorded events") {
  Harness h;
  std::vector<std::pair<int, EventKind>> seen;
  ScriptedBackend backend({{"", std::nullopt, "ANSWER: 1"}});
  Episode episode =
      h.run(backend, "Q?", config_for(Strategy::baseline),
            [&](const TraceEvent& e) { seen.emplace_back(e.seq, e.kind); });
  REQUIRE(seen.size() == episode.events.size());
  for (std::size_t i = 0; i < seen.size(); ++i) {
    CHECK(seen[i].first == episode.events[i].seq);
    CHECK(seen[i].second == episode.events[i].kind);
  }
}
