#include <map>
#include <string>

#include <benchmark/benchmark.h>

#include "cogtools/evaluation.hpp"
#include "cogtools/prompt_catalog.hpp"

namespace {

using namespace cogtools;

void BM_GradeExactNumeric(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(grade_parse("3245/5", "649"));
  }
}
BENCHMARK(BM_GradeExactNumeric);

void BM_GradeUnitSuffix(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(grade_parse("72 degrees", "72"));
  }
}
BENCHMARK(BM_GradeUnitSuffix);

void BM_GradeExpression(benchmark::State& state) {
  // The slow path: both sides parse as symbolic expressions and are compared
  // by sampling.
  for (auto _ : state) {
    benchmark::DoNotOptimize(grade_parse("$x^2+2x+1$", "$(x+1)^2$"));
  }
}
BENCHMARK(BM_GradeExpression);

void BM_GradeBoxedAnswer(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(grade_parse("$\\boxed{\\frac{5}{6}}$", "5/6"));
  }
}
BENCHMARK(BM_GradeBoxedAnswer);

void BM_RenderSystemPrompt(benchmark::State& state) {
  const PromptCatalog& catalog = PromptCatalog::builtin();
  const std::map<std::string, std::string> bindings{
      {"cognitive_tools_signature",
       PromptCatalog::tool_signature_block(all_tools())}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        catalog.render(TemplateId::cognitive_tools_system, bindings));
  }
}
BENCHMARK(BM_RenderSystemPrompt);

void BM_RenderJudgePrompt(benchmark::State& state) {
  const PromptCatalog& catalog = PromptCatalog::builtin();
  const std::map<std::string, std::string> bindings{
      {"expression1", "2/(-3)"}, {"expression2", "-2/3"}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(catalog.render(TemplateId::judge, bindings));
  }
}
BENCHMARK(BM_RenderJudgePrompt);

}  // namespace

BENCHMARK_MAIN();
