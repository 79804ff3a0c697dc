#include <gtest/gtest.h>

#include <sstream>

#include <gsink/experiments.hpp>
#include <gsink/report_io.hpp>
#include <gsink/sweeps.hpp>
#include <gsink/verify.hpp>
#include <gsink/wire.hpp>

using namespace gsink;

namespace {

RunConfig small(std::vector<std::string> extra = {}) {
  std::vector<std::string> ov{"problem.d=24", "network.N=9", "seeds=[0,1]"};
  ov.insert(ov.end(), extra.begin(), extra.end());
  return parse_run_config("{}", ov);
}

}  // namespace

TEST(Run, SingleNodeEqualsCentralized) {
  auto c = small({"network.topology_kind=complete", "network.N=1", "comms.delta=0", "comms.bits=unquantized",
                  "comms.tau_inner=1e-10", "comms.tau_outer=1e-11"});
  const auto inst = make_instance(c, 0);
  const auto cen = centralized_barycenter(inst, 1e-11, 100000);
  const auto run = run_from_config(c, 0);
  ASSERT_TRUE(run.metrics.converged);
  EXPECT_EQ(run.metrics.messages_total, 0u);
  EXPECT_LT((run.node_barycenters[0].weights() - cen.barycenter.weights()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Run, ConvergesWithinBiasBoundAndBudget) {
  const auto c = small();
  for (auto seed : c.seeds) {
    const auto r = run_from_config(c, seed);
    EXPECT_TRUE(r.metrics.converged);
    EXPECT_FALSE(r.metrics.clip_active);
    EXPECT_LE(r.metrics.l1_error_max, r.metrics.bias_bound);
    EXPECT_LT(r.metrics.l1_error_max, 1e-2);
    EXPECT_TRUE(trigger_budget_holds(r.metrics, c.comms.delta));
    EXPECT_EQ(r.metrics.l1_error_per_node.size(), 9u);
    std::uint64_t sum = 0;
    for (auto m : r.metrics.messages_per_agent) sum += m;
    EXPECT_EQ(sum, r.metrics.messages_total);
  }
}

TEST(Run, DeterministicAcrossRepeats) {
  const auto c = small({"activation.mode=randomized_subset", "channel.drop_prob=0.1", "channel.max_staleness=1",
                        "comms.outer_iter_cap=15"});
  const auto a = run_from_config(c, 3), b = run_from_config(c, 3);
  EXPECT_EQ(a.metrics.messages_total, b.metrics.messages_total);
  EXPECT_EQ(a.metrics.rounds, b.metrics.rounds);
  ASSERT_EQ(a.node_log_v.size(), b.node_log_v.size());
  for (std::size_t i = 0; i < a.node_log_v.size(); ++i) EXPECT_EQ(a.node_log_v[i], b.node_log_v[i]);
}

TEST(Run, PacketTraceCountsEveryCopy) {
  const auto c = small({"channel.drop_prob=0.2", "channel.max_staleness=2", "comms.outer_iter_cap=5"});
  std::stringstream trace;
  RunOptions opt;
  opt.packet_trace = &trace;
  const auto r = run_from_config(c, 0, opt);
  const auto records = read_packet_trace(trace, c.comms);
  EXPECT_EQ(records.size(), r.metrics.messages_total);
  EXPECT_EQ(r.metrics.bytes_total, r.metrics.messages_total * wire_size(24, c.comms));
}

TEST(Run, MessagesDoNotGrowWithDelta) {
  std::uint64_t previous = UINT64_MAX;
  for (double delta : {0.0, 1e-4, 1e-3, 1e-2}) {
    const auto c = small({"comms.delta=" + format_double(delta)});
    const auto r = run_from_config(c, 1);
    EXPECT_LE(r.metrics.messages_total, previous) << "delta=" << delta;
    previous = r.metrics.messages_total;
  }
}

TEST(Run, ObserverSeesEveryOuterIteration) {
  const auto c = small();
  int calls = 0;
  RunOptions opt;
  opt.observer = [&](int outer, std::span<const AgentState> agents) {
    EXPECT_EQ(outer, calls++);
    EXPECT_EQ(agents.size(), 9u);
  };
  const auto r = run_from_config(c, 0, opt);
  EXPECT_EQ(calls, r.metrics.outer_iterations);
  EXPECT_EQ(r.metrics.per_outer_iter.size(), static_cast<std::size_t>(calls));
}

TEST(Run, ConvergenceTraceHasBothVariants) {
  const auto rows = run_convergence_trace(small(), 0);
  std::size_t always = 0, triggered = 0;
  for (const auto& r : rows) (r.variant == "always_gossip" ? always : triggered)++;
  EXPECT_GT(always, 0u);
  EXPECT_GT(triggered, 0u);
  const auto overlap = run_overlap(small(), 0);
  ASSERT_EQ(overlap.size(), 24u);
  for (const auto& o : overlap) EXPECT_LE(o.b_tilde_min, o.b_tilde_max);
}

TEST(Theory, ConstantsAtDefaults) {
  const auto c = parse_run_config("{}");
  const auto t = theory_constants(make_instance(c, 0), c.comms);
  EXPECT_LE(t.rho, t.rho_bound);
  EXPECT_NEAR(t.rho_bound, std::pow(std::tanh(5.0), 2), 1e-15);
  EXPECT_FALSE(t.slow_contraction);
  EXPECT_TRUE(std::isfinite(t.steady_state_bias_bound));
  auto tiny = parse_run_config("{}", std::vector<std::string>{"problem.epsilon=0.01", "problem.d=16"});
  EXPECT_TRUE(theory_constants(make_instance(tiny, 0), tiny.comms).slow_contraction);
}

TEST(Sweep, TablesAreReproducible) {
  auto c = small({"seeds=[0,1]", "problem.d=16"});
  c.sweep = SweepConfig{"delta", {1e-3, 1e-2}};
  const auto spec = SweepSpec::from_config(c);
  const auto a = run_sweep(spec, 1), b = run_sweep(spec, 2);
  const auto ta = sweep_table(a), tb = sweep_table(b);
  EXPECT_EQ(ta.rows, tb.rows);
  EXPECT_EQ(sweep_jobs_table(a).rows, sweep_jobs_table(b).rows);
  ASSERT_EQ(a.points.size(), 2u);
  EXPECT_EQ(a.points[0].runs, 2u);
  EXPECT_FALSE(a.any_failed());
}

TEST(Sweep, FailedJobsAreRecorded) {
  auto c = small({"network.topology_kind=random_geometric", "network.params.radius=0.05", "seeds=[0]",
                  "problem.d=8"});
  c.sweep = SweepConfig{"N", {1, 30}};
  const auto r = run_sweep(SweepSpec::from_config(c));
  EXPECT_TRUE(r.any_failed());
  EXPECT_EQ(r.points[0].failures, 0u);
  EXPECT_EQ(r.points[1].failures, 1u);
  EXPECT_FALSE(r.jobs[1].error_message.empty());
}

TEST(Sweep, RejectsBadSpecs) {
  auto c = small();
  EXPECT_THROW(SweepSpec::from_config(c), ConfigError);
  c.sweep = SweepConfig{"colour", {1}};
  EXPECT_THROW(SweepSpec::from_config(c), ConfigError);
  c.sweep = SweepConfig{"N", {9, 4}};
  EXPECT_THROW(SweepSpec::from_config(c), ConfigError);
}

TEST(Verify, SmallConfigPasses) {
  auto c = small({"seeds=[0]", "problem.d=16"});
  VerifyOptions opt;
  opt.deltas = {1e-3, 1e-2};
  opt.bits = {12, 16};
  const auto report = verify_theory(c, opt);
  for (const auto& chk : report.checks) EXPECT_NE(chk.status, CheckStatus::failed) << chk.name << ": " << chk.summary;
  EXPECT_NE(report.find("hilbert_contraction"), nullptr);
  EXPECT_EQ(report.checks.size(), 7u);
}
