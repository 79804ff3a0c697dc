#include <benchmark/benchmark.h>

#include <gsink/densities.hpp>
#include <gsink/ot_core.hpp>
#include <gsink/protocol.hpp>

namespace {

gsink::ProblemInstance instance(std::size_t d, std::size_t n) {
  auto cost = gsink::CostMatrix::squared_grid(d);
  return gsink::ProblemInstance(std::move(cost), 0.1, 1e-16,
                                gsink::mixture_histograms(n, d, 1, 0, gsink::MixturePrior{}));
}

void BM_LogMessage(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto inst = instance(d, 1);
  const gsink::Vector u = gsink::Vector::Constant(static_cast<Eigen::Index>(d), 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(gsink::log_message(u, inst.kernel()));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LogMessage)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_CentralizedStep(benchmark::State& state) {
  const auto inst = instance(64, static_cast<std::size_t>(state.range(0)));
  gsink::Vector log_v = gsink::Vector::Zero(64);
  for (auto _ : state) {
    log_v = gsink::centralized_log_step(inst.histograms(), inst.kernel(), inst.ridge(), log_v);
    benchmark::DoNotOptimize(log_v.data());
  }
}
BENCHMARK(BM_CentralizedStep)->Arg(4)->Arg(16)->Arg(64);

void BM_Quantize(benchmark::State& state) {
  gsink::CommsConfig comms;
  comms.bits = static_cast<int>(state.range(0));
  gsink::Vector z = gsink::Vector::LinSpaced(1024, -25.0, 25.0);
  for (auto _ : state) benchmark::DoNotOptimize(gsink::quantize(gsink::clip_log(z, -30.0, 30.0), comms));
  state.SetItemsProcessed(state.iterations() * z.size());
}
BENCHMARK(BM_Quantize)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
