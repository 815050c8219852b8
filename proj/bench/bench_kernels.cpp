// Serial reference versus OpenMP kernels. Arg 0 selects serial, 1 parallel.

#include <benchmark/benchmark.h>

#include <random>

#include "mfpne/equilibrium.hpp"
#include "mfpne/policies.hpp"
#include "mfpne/testbeds.hpp"

using namespace mfpne;

namespace {

Execution exec_of(const benchmark::State& s) { return s.range(0) ? Execution::parallel : Execution::serial; }

const GameInstance& instance() {
  static const GameInstance inst = [] {
    SyntheticConfig c;
    c.grid_points = 32;
    return make_synthetic_instance(c, 128.0, 0.5, 1);
  }();
  return inst;
}

SurrogateSet observed_set(Execution exec, int observations) {
  const auto& inst = instance();
  SurrogateSet s = SurrogateSet::full_grid(inst.spec, exec);
  Rng rng(3);
  std::uniform_int_distribution<ProfileIndex> pick(0, inst.spec.space.profiles() - 1);
  for (int i = 0; i < observations; ++i) {
    const ProfileIndex x = pick(rng);
    const std::vector<int> m{1 + i % 2, 2};
    s.record({x, m}, {inst.oracle->observe(0, x, m[0], rng), inst.oracle->observe(1, x, m[1], rng)});
  }
  return s;
}

void BM_CacheSync(benchmark::State& state) {
  const auto& inst = instance();
  for (auto _ : state) {
    state.PauseTiming();
    SurrogateSet s = observed_set(exec_of(state), 40);
    state.ResumeTiming();
    Rng rng(5);
    for (ProfileIndex x = 0; x < 10; ++x)
      s.record({x * 7, {2, 2}}, {inst.oracle->observe(0, x, 2, rng), inst.oracle->observe(1, x, 2, rng)});
    benchmark::DoNotOptimize(s.cache(0).mean(0));
  }
}

void BM_PosteriorBatch(benchmark::State& state) {
  const SurrogateSet s = observed_set(Execution::serial, 100);
  const auto& space = instance().spec.space;
  std::vector<QueryPoint> q;
  for (ProfileIndex x = 0; x < space.profiles(); ++x) q.push_back({space.features(x), 2});
  for (auto _ : state) {
    auto r = state.range(0) ? kernels::posterior_batch(s.model(0), q) : kernels::posterior_batch_serial(s.model(0), q);
    benchmark::DoNotOptimize(r.data());
  }
}

void BM_DissatisfactionTable(benchmark::State& state) {
  const auto& inst = instance();
  for (auto _ : state) {
    auto t = DissatisfactionTable::exhaustive(inst.oracle, inst.spec.space, exec_of(state));
    benchmark::DoNotOptimize(t.eps_star());
  }
}

void BM_ConfidenceState(benchmark::State& state) {
  const SurrogateSet s = observed_set(Execution::serial, 60);
  for (auto _ : state) {
    auto st = build_confidence_state(s, {3.0, 3.0}, {1.0, 1.0}, exec_of(state));
    benchmark::DoNotOptimize(st.f_hi[0].data());
  }
}

void BM_PeScores(benchmark::State& state) {
  const SurrogateSet s = observed_set(Execution::serial, 60);
  for (auto _ : state) {
    auto sc = pe_scores(s, 64, 7, exec_of(state));
    benchmark::DoNotOptimize(sc.data());
  }
}

}  // namespace

BENCHMARK(BM_CacheSync)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PosteriorBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DissatisfactionTable)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConfidenceState)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PeScores)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
