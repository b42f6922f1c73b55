#include <set>
#include <string>

#include <benchmark/benchmark.h>

#include "cogtools/output_parser.hpp"
#include "cogtools/tool_names.hpp"

namespace {

using namespace cogtools;

const std::set<ToolName> kRegistry(all_tools().begin(), all_tools().end());

const std::string kProseReply =
    "First I will restate the problem. We are asked for the greatest common "
    "divisor of three integers, which suggests repeated application of the "
    "Euclidean algorithm. Let me reason about the prime factorizations and "
    "check whether a shared factor of three or seven shows up in each term "
    "before committing to an answer.";

const std::string kToolCallReply =
    "I should break this down systematically before answering.\n\n"
    "understand_question({'question': 'Find the greatest common divisor of "
    "$3339$, $2961$, and $1491$.', 'model': 'math-expert'})";

const std::string kFencedReply =
    "Thought: I will compute this directly.\n"
    "Code:\n"
    "```python\n"
    "import math\n"
    "a, b, c = 3339, 2961, 1491\n"
    "print(math.gcd(math.gcd(a, b), c))\n"
    "```\n";

const std::string kAnswerReply =
    "The computation shows every term is divisible by 21 and no larger value "
    "divides all three.\n\nANSWER: 21";

void BM_ClassifyProse(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(classify(kProseReply, kRegistry));
  }
}
BENCHMARK(BM_ClassifyProse);

void BM_ClassifyToolCall(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(classify(kToolCallReply, kRegistry));
  }
}
BENCHMARK(BM_ClassifyToolCall);

void BM_ClassifyFencedCode(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(classify(kFencedReply, kRegistry));
  }
}
BENCHMARK(BM_ClassifyFencedCode);

void BM_ExtractFinalAnswer(benchmark::State& state) {
  // A long transcript tail with the marker near the end, the common case
  // when scanning full assistant replies.
  std::string text;
  for (int i = 0; i < state.range(0); ++i) text += kProseReply + "\n";
  text += kAnswerReply;
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_final_answer(text));
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_ExtractFinalAnswer)->Arg(1)->Arg(16)->Arg(128);

void BM_NormalizeAnswer(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(normalize_answer("**$\\boxed{\\frac{5}{6}}$**"));
  }
}
BENCHMARK(BM_NormalizeAnswer);

void BM_RenderRoundTrip(benchmark::State& state) {
  ToolInvocation invocation;
  invocation.tool_name = ToolName::examine_answer;
  invocation.arguments = {{"question", "What is 17 + 25?"},
                          {"current_trace", kProseReply},
                          {"proposed_answer", "42"}};
  for (auto _ : state) {
    const std::string text =
        render_invocation(invocation, CallSyntax::fenced_print);
    benchmark::DoNotOptimize(extract_tool_call(text, kRegistry));
  }
}
BENCHMARK(BM_RenderRoundTrip);

}  // namespace

BENCHMARK_MAIN();
