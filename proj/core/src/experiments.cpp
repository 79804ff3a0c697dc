#include "gsink/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "gsink/densities.hpp"
#include "gsink/wire.hpp"

namespace gsink {

CentralizedResult oracle_barycenter(const ProblemInstance& instance) {
  return centralized_barycenter(instance, kOracleTolerance, kOracleIterationCap);
}

bool trigger_budget_holds(const RunMetrics& metrics, double delta) {
  if (!(delta > 0.0)) return true;
  for (std::size_t i = 0; i < metrics.broadcasts_per_agent.size(); ++i) {
    const double budget = 1.0 + std::ceil(metrics.variation_per_agent[i] / delta);
    if (static_cast<double>(metrics.broadcasts_per_agent[i]) > budget) return false;
  }
  return true;
}

RunResult run_decentralized(const ProblemInstance& instance, const Topology& topology,
                            const CommsConfig& comms, ChannelModel channel,
                            ActivationModel activation, std::uint64_t seed,
                            const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = instance.num_agents();
  if (topology.num_nodes() != n) {
    throw InvalidArgument("run_decentralized: topology has " + std::to_string(topology.num_nodes()) +
                          " nodes but the instance has " + std::to_string(n) + " histograms");
  }
  channel.seed = seed;
  activation.seed = seed;
  Network net(topology, comms, channel, activation);
  net.set_trace_sink(options.packet_trace);

  const GibbsKernel& kernel = instance.kernel();
  std::vector<AgentState> agents;
  agents.reserve(n);
  for (std::size_t i = 0; i < n; ++i) agents.push_back(AgentState::initial(static_cast<AgentId>(i), kernel));

  RunResult result;
  RunMetrics& m = result.metrics;
  const double threshold = comms.outer_stop_threshold();

  for (int t = 0; t < comms.outer_iter_cap; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        local_scaling_update(agents[i], instance.histograms()[i], kernel, instance.ridge());
      } catch (const NumericalError& e) {
        std::ostringstream msg;
        msg << e.what() << " (outer iteration " << t << ")";
        throw NumericalError(msg.str());
      }
      reseed_inner(agents[i]);
    }

    OuterRecord rec;
    rec.outer_iter = t;
    rec.consensus_residual_trace.push_back(consensus_residual(agents));
    for (int s = 0; s < comms.inner_step_cap; ++s) {
      net.schedule_round(agents, static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(s));
      ++rec.inner_steps_used;
      rec.consensus_residual_trace.push_back(consensus_residual(agents));
      const bool all_done = std::all_of(agents.begin(), agents.end(),
                                        [&](const AgentState& a) { return inner_converged(a, comms); });
      if (all_done) break;
    }

    double change = 0.0;
    for (auto& a : agents) change = std::max(change, shared_projection(a));
    rec.log_v_change_linf = change;
    m.per_outer_iter.push_back(std::move(rec));
    m.outer_iterations = t + 1;
    if (options.observer) options.observer(t, agents);
    if (change < threshold) {
      m.converged = true;
      break;
    }
  }

  const Histogram reference = options.reference ? *options.reference : oracle_barycenter(instance).barycenter;
  double sum = 0.0;
  for (const auto& a : agents) {
    Histogram b = node_barycenter(a);
    const double err = l1_distance(b, reference);
    m.l1_error_per_node.push_back(err);
    m.l1_error_max = std::max(m.l1_error_max, err);
    sum += err;
    m.broadcasts_per_agent.push_back(a.messages_sent);
    m.variation_per_agent.push_back(a.variation_accum);
    m.clip_active = m.clip_active || a.clip_active;
    result.node_barycenters.push_back(std::move(b));
    result.node_log_v.push_back(a.log_v);
  }
  m.l1_error_mean = n ? sum / static_cast<double>(n) : 0.0;
  m.messages_per_agent = net.copies_per_agent();
  for (auto c : m.messages_per_agent) m.messages_total += c;
  m.bytes_total = m.messages_total * wire_size(instance.support_size(), comms);
  m.rounds = net.rounds_elapsed();
  m.bias_bound = theory_constants(instance, comms).steady_state_bias_bound;
  m.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

RunResult run_from_config(const RunConfig& config, std::uint64_t seed, const RunOptions& options) {
  const ProblemInstance instance = make_instance(config, seed);
  const Topology topology = build_topology(config.topology_spec());
  return run_decentralized(instance, topology, config.comms, config.channel, config.activation, seed,
                           options);
}

std::vector<TraceRow> trace_rows(const RunMetrics& metrics, const std::string& variant) {
  std::vector<TraceRow> rows;
  std::uint64_t index = 0;
  for (const auto& rec : metrics.per_outer_iter) {
    for (std::size_t s = 0; s < rec.consensus_residual_trace.size(); ++s) {
      rows.push_back({variant, rec.outer_iter, static_cast<int>(s), index++, rec.consensus_residual_trace[s]});
    }
  }
  return rows;
}

std::vector<TraceRow> run_convergence_trace(const RunConfig& config, std::uint64_t seed) {
  const ProblemInstance instance = make_instance(config, seed);
  const Topology topology = build_topology(config.topology_spec());
  const Histogram reference = oracle_barycenter(instance).barycenter;
  RunOptions options;
  options.reference = reference;

  CommsConfig always = config.comms;
  always.delta = 0.0;
  auto rows = trace_rows(
      run_decentralized(instance, topology, always, config.channel, config.activation, seed, options).metrics,
      "always_gossip");
  auto triggered = trace_rows(
      run_decentralized(instance, topology, config.comms, config.channel, config.activation, seed, options)
          .metrics,
      "event_triggered");
  rows.insert(rows.end(), triggered.begin(), triggered.end());
  return rows;
}

std::vector<OverlapRow> overlap_rows(const Histogram& b_star, std::span<const Histogram> nodes) {
  const std::size_t d = b_star.size();
  const Vector x = support_grid(d);
  std::vector<OverlapRow> rows(d);
  for (std::size_t j = 0; j < d; ++j) {
    rows[j].support_x = x(static_cast<Eigen::Index>(j));
    rows[j].b_star = b_star[j];
    rows[j].b_tilde_min = nodes.empty() ? 0.0 : nodes.front()[j];
    rows[j].b_tilde_max = rows[j].b_tilde_min;
    for (const auto& b : nodes) {
      rows[j].b_tilde_min = std::min(rows[j].b_tilde_min, b[j]);
      rows[j].b_tilde_max = std::max(rows[j].b_tilde_max, b[j]);
    }
  }
  return rows;
}

std::vector<OverlapRow> run_overlap(const RunConfig& config, std::uint64_t seed) {
  const ProblemInstance instance = make_instance(config, seed);
  const Topology topology = build_topology(config.topology_spec());
  const Histogram reference = oracle_barycenter(instance).barycenter;
  RunOptions options;
  options.reference = reference;
  const auto run =
      run_decentralized(instance, topology, config.comms, config.channel, config.activation, seed, options);
  return overlap_rows(reference, run.node_barycenters);
}

}  // namespace gsink
