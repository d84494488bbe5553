#include <sstream>
#include <string>

#include <benchmark/benchmark.h>

#include "modelavg/data_io.hpp"
#include "modelavg/experiments.hpp"
#include "modelavg/parallel.hpp"

using namespace modelavg;

static void BM_LeastSquaresSparseStep(benchmark::State& state) {
  const LeastSquares obj(make_sparse_regression(4000, 2000, 3, 0.001, 1));
  ModelVector w(obj.dimension());
  std::uint64_t t = 0;
  for (auto _ : state) {
    Rng rng = worker_rng(1, 0, t++);
    obj.sample_step(w, 0.1, rng);
  }
  benchmark::DoNotOptimize(w.values().data());
}
BENCHMARK(BM_LeastSquaresSparseStep);

static void BM_OjaStep(benchmark::State& state) {
  const auto obj = OjaPcaStream::standard(static_cast<std::size_t>(state.range(0)), 1);
  ModelVector w = ModelVector::filled(obj.dimension(), 0.1);
  std::uint64_t t = 0;
  for (auto _ : state) {
    Rng rng = worker_rng(1, 0, t++);
    obj.sample_step(w, 0.001, rng);
  }
  benchmark::DoNotOptimize(w.values().data());
}
BENCHMARK(BM_OjaStep)->Arg(20)->Arg(100);

static void BM_RunParallelQuartic(benchmark::State& state) {
  const QuarticDoubleWell obj;
  ParallelRunConfig cfg;
  cfg.workers = 24;
  cfg.total_steps = 10000;
  cfg.schedule = AveragingSchedule::every(static_cast<std::uint64_t>(state.range(0)));
  cfg.step = StepSchedule::constant(0.025);
  cfg.trace_every = 0;
  cfg.track_workers = false;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_parallel(obj, cfg).final_model[0]);
    ++cfg.seed;
  }
  state.SetItemsProcessed(state.iterations() * 24 * 10000);
}
BENCHMARK(BM_RunParallelQuartic)->Arg(1)->Arg(10)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_ParseLibsvm(benchmark::State& state) {
  std::ostringstream os;
  write_libsvm(os, make_sparse_regression(10000, 1000, 10, 0.1, 2));
  const std::string text = os.str();
  for (auto _ : state) benchmark::DoNotOptimize(parse_libsvm(text).n_rows());
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseLibsvm)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
