#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "cogtools/stats.hpp"

namespace {

using namespace cogtools;

std::vector<double> sample_accuracies(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(40.0, 90.0);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) values.push_back(dist(rng));
  return values;
}

void BM_WelchTTest(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const std::vector<double> a = sample_accuracies(n, 1);
  const std::vector<double> b = sample_accuracies(n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(welch_t_test(a, b));
  }
}
BENCHMARK(BM_WelchTTest)->Arg(16)->Arg(256);

void BM_Pearson(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937 rng(3);
  std::vector<double> u;
  std::vector<double> v;
  for (int i = 0; i < n; ++i) {
    u.push_back(static_cast<double>(rng() % 2));
    v.push_back(static_cast<double>(rng() % 2));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(pearson(u, v));
  }
}
BENCHMARK(BM_Pearson)->Arg(16)->Arg(800);

void BM_PassAt1(benchmark::State& state) {
  // The headline configuration: 16 repetitions over a 50-question split.
  std::mt19937 rng(4);
  std::vector<std::vector<bool>> matrix(16, std::vector<bool>(50));
  for (auto& row : matrix) {
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = rng() % 2;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(pass_at_1(matrix));
  }
}
BENCHMARK(BM_PassAt1);

void BM_StudentTPValue(benchmark::State& state) {
  // Exercises the incomplete-beta continued fraction across magnitudes.
  double t = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(student_t_two_sided_p(t, 12.5));
    t = t > 30.0 ? 0.5 : t * 1.5;
  }
}
BENCHMARK(BM_StudentTPValue);

}  // namespace

BENCHMARK_MAIN();
