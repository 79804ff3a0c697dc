#pragma once

// End-to-end decentralized runs against the centralized oracle, plus the
// per-figure experiment drivers.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsink/config.hpp"
#include "gsink/netsim.hpp"
#include "gsink/ot_core.hpp"
#include "gsink/protocol.hpp"
#include "gsink/theory.hpp"

namespace gsink {

inline constexpr double kOracleTolerance = 1e-12;
inline constexpr int kOracleIterationCap = 100000;

/// Centralized barycenter at the oracle tolerance (1e-12, cap 1e5).
CentralizedResult oracle_barycenter(const ProblemInstance& instance);

struct OuterRecord {
  int outer_iter = 0;
  int inner_steps_used = 0;
  /// Consensus residual right after the reseed, then after every inner step.
  std::vector<double> consensus_residual_trace;
  /// max over nodes of ||log v_new - log v_old||_inf.
  double log_v_change_linf = 0.0;
};

struct RunMetrics {
  std::vector<OuterRecord> per_outer_iter;
  std::vector<double> l1_error_per_node;
  double l1_error_max = 0.0;
  double l1_error_mean = 0.0;
  /// Directed packet copies put on the wire, total and per sender.
  std::uint64_t messages_total = 0;
  std::vector<std::uint64_t> messages_per_agent;
  /// Trigger firings per node (M_i) and the variation budget V_i they are checked against.
  std::vector<std::uint64_t> broadcasts_per_agent;
  std::vector<double> variation_per_agent;
  std::uint64_t bytes_total = 0;
  std::uint64_t rounds = 0;
  int outer_iterations = 0;
  double wall_clock_seconds = 0.0;
  double bias_bound = 0.0;
  bool converged = false;
  /// Some broadcast had an entry clipped to [s_min, s_max].
  bool clip_active = false;
};

/// True when every node satisfies M_i <= 1 + ceil(V_i / delta). Vacuous for delta = 0.
bool trigger_budget_holds(const RunMetrics& metrics, double delta);

struct RunResult {
  RunMetrics metrics;
  std::vector<Histogram> node_barycenters;
  /// Final log v of every node.
  std::vector<Vector> node_log_v;
};

/// Called after each outer iteration's shared projection.
using OuterObserver = std::function<void(int outer_iter, std::span<const AgentState> agents)>;

struct RunOptions {
  /// Reference barycenter for the l1 errors; computed with oracle_barycenter when empty.
  std::optional<Histogram> reference;
  /// Receives the packet-trace dump (see Network::set_trace_sink).
  std::ostream* packet_trace = nullptr;
  OuterObserver observer;
};

/// Runs the full decentralized scheme. The channel and activation models
/// draw from `seed`. Throws NumericalError naming the node and outer iteration
/// when exp(z) overflows.
RunResult run_decentralized(const ProblemInstance& instance, const Topology& topology,
                            const CommsConfig& comms, ChannelModel channel,
                            ActivationModel activation, std::uint64_t seed,
                            const RunOptions& options = {});

/// run_decentralized on the instance and topology described by a config.
RunResult run_from_config(const RunConfig& config, std::uint64_t seed, const RunOptions& options = {});

struct TraceRow {
  std::string variant;
  int outer_iter = 0;
  int inner_step = 0;
  /// Position in the concatenated trace of the variant.
  std::uint64_t index = 0;
  double residual = 0.0;
};

/// Consensus residual per inner step, concatenated over outer iterations, for
/// the always-gossip (delta = 0) and the event-triggered variant of a config.
std::vector<TraceRow> run_convergence_trace(const RunConfig& config, std::uint64_t seed);

/// Trace rows of a finished run under a variant label.
std::vector<TraceRow> trace_rows(const RunMetrics& metrics, const std::string& variant);

struct OverlapRow {
  double support_x = 0.0;
  double b_star = 0.0;
  double b_tilde_min = 0.0;
  double b_tilde_max = 0.0;
};

std::vector<OverlapRow> overlap_rows(const Histogram& b_star, std::span<const Histogram> nodes);

/// Oracle barycenter next to the per-node range of the decentralized outputs.
std::vector<OverlapRow> run_overlap(const RunConfig& config, std::uint64_t seed);

}  // namespace gsink
