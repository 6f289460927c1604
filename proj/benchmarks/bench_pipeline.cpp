#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "ranatomy/corpus.hpp"
#include "ranatomy/parser.hpp"
#include "ranatomy/stats.hpp"

namespace {

// A mid-sized script: a few hundred lines of typical package code.
std::string sample_source(int functions) {
  std::string s;
  for (int i = 0; i < functions; ++i) {
    const std::string n = std::to_string(i);
    s += "f" + n + " <- function(x, y = " + n + ", ...) {\n";
    s += "  out <- vector(\"list\", length(x))\n";
    s += "  for (i in seq_along(x)) {\n";
    s += "    if (is.null(x[[i]])) next\n";
    s += "    out[[i]] <- stats::median(x[[i]]) + y\n";
    s += "  }\n";
    s += "  names(out) <- names(x)\n";
    s += "  out\n}\n";
  }
  return s;
}

void BM_Parse(benchmark::State& state) {
  const std::string src = sample_source(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto outcome = ranatomy::parse(src);
    benchmark::DoNotOptimize(outcome);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_Parse)->Arg(10)->Arg(100)->Arg(1000);

void BM_ProcessSource(benchmark::State& state) {
  const std::string src = sample_source(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto record = ranatomy::process_source("bench.R", ranatomy::FileCategory::Default, src);
    benchmark::DoNotOptimize(record);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_ProcessSource)->Arg(10)->Arg(100)->Arg(1000);

void BM_FisherExact(benchmark::State& state) {
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ranatomy::fisher_exact_2x2({n, 2 * n, 3 * n / 2, n}));
}
BENCHMARK(BM_FisherExact)->Arg(10)->Arg(1000)->Arg(100000);

void BM_MannWhitney(benchmark::State& state) {
  std::mt19937 rng(7);
  std::poisson_distribution<int> counts(2.0);
  std::vector<double> xs(static_cast<std::size_t>(state.range(0))), ys(xs.size());
  for (auto& v : xs) v = counts(rng);
  for (auto& v : ys) v = counts(rng) + 1;
  for (auto _ : state) benchmark::DoNotOptimize(ranatomy::mann_whitney(xs, ys));
}
BENCHMARK(BM_MannWhitney)->Arg(20)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
