#include <benchmark/benchmark.h>

#include <vector>

#include <gsink/netsim.hpp>
#include <gsink/rng.hpp>

namespace {

// One synchronous gossip round on a square grid with d = 64 and random z.
void BM_GossipRound(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  gsink::TopologySpec spec;
  spec.kind = gsink::TopologyKind::grid2d;
  spec.rows = spec.cols = side;
  const auto topo = gsink::build_topology(spec);
  gsink::CommsConfig comms;
  gsink::Network net(topo, comms, gsink::ChannelModel{}, gsink::ActivationModel{});

  std::vector<gsink::AgentState> agents(topo.num_nodes());
  gsink::StreamRng rng(7, gsink::StreamTag::sampling, 0);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    auto& a = agents[i];
    a.id = static_cast<gsink::AgentId>(i);
    a.z = gsink::Vector::NullaryExpr(64, [&] { return rng.uniform(-1.0, 1.0); });
    a.log_v = gsink::Vector::Zero(64);
  }
  std::uint32_t step = 0;
  for (auto _ : state) benchmark::DoNotOptimize(net.schedule_round(agents, 0, step++));
  state.SetComplexityN(static_cast<benchmark::IterationCount>(topo.num_nodes()));
}
BENCHMARK(BM_GossipRound)->DenseRange(2, 8, 2)->Complexity();

void BM_SpectralGap(benchmark::State& state) {
  gsink::TopologySpec spec;
  spec.kind = gsink::TopologyKind::ring;
  spec.num_nodes = static_cast<std::size_t>(state.range(0));
  const auto w = gsink::metropolis_weights(gsink::build_topology(spec));
  for (auto _ : state) benchmark::DoNotOptimize(gsink::spectral_gap(w.w));
}
BENCHMARK(BM_SpectralGap)->Arg(16)->Arg(64);

}  // namespace
