#pragma once

// Deterministic round-based network simulator: topologies, Metropolis
// averaging weights, spectral diagnostics, lossy and delayed channels, and
// randomized activation.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gsink/protocol.hpp"
#include "gsink/types.hpp"

namespace gsink {

enum class TopologyKind { grid2d, ring, path, complete, random_geometric };

std::string_view to_string(TopologyKind kind);
/// Throws InvalidArgument for unknown names.
TopologyKind parse_topology_kind(std::string_view name);

struct TopologySpec {
  TopologyKind kind = TopologyKind::grid2d;
  /// Node count for ring, path, complete and random_geometric.
  std::size_t num_nodes = 0;
  /// Grid shape; num_nodes is ignored for grid2d.
  std::size_t rows = 0;
  std::size_t cols = 0;
  double radius = 0.0;
  std::uint64_t seed = 0;
  /// Resampling budget of random_geometric before giving up.
  int max_attempts = 100;
};

class Topology {
 public:
  using Edge = std::pair<AgentId, AgentId>;

  /// Edges are normalized to (min, max), deduplicated and sorted. Throws
  /// TopologyError for self-loops, out-of-range endpoints or a disconnected graph.
  Topology(std::size_t num_nodes, std::vector<Edge> edges, TopologyKind kind);

  std::size_t num_nodes() const noexcept { return neighbors_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// Sorted neighbor ids of node i.
  const std::vector<AgentId>& neighbors(AgentId i) const { return neighbors_.at(i); }
  std::size_t degree(AgentId i) const { return neighbors_.at(i).size(); }
  std::size_t max_degree() const noexcept;
  TopologyKind kind() const noexcept { return kind_; }

 private:
  std::vector<Edge> edges_;
  std::vector<std::vector<AgentId>> neighbors_;
  TopologyKind kind_;
};

Topology build_topology(const TopologySpec& spec);

/// True when the undirected graph on num_nodes vertices is connected.
bool is_connected(std::size_t num_nodes, const std::vector<Topology::Edge>& edges);

struct GossipWeights {
  Matrix w;
  /// Second largest singular value of w.
  double sigma2 = 0.0;
  /// Smallest positive entry of w.
  double beta = 0.0;
};

/// w_ik = 1 / (1 + max(deg_i, deg_k)) on edges, remainder on the diagonal.
GossipWeights metropolis_weights(const Topology& topology);

struct SpectralInfo {
  double sigma2 = 0.0;
  double gap = 1.0;
};

/// sigma2 = largest singular value of w - 11^T/N, i.e. the second singular
/// value of a doubly stochastic w.
SpectralInfo spectral_gap(const Matrix& w);
inline SpectralInfo spectral_gap(const GossipWeights& weights) { return spectral_gap(weights.w); }

/// Metropolis weights of the subgraph induced by the active nodes, embedded
/// in an N x N matrix. Inactive nodes keep identity rows.
Matrix subgraph_metropolis(const Topology& topology, const std::vector<bool>& active);

/// Sparse rows of the same matrix, in the form gossip_step consumes.
std::vector<WeightRow> subgraph_metropolis_rows(const Topology& topology,
                                                const std::vector<bool>& active);

struct ChannelModel {
  /// Independent loss probability per directed copy.
  double drop_prob = 0.0;
  /// Delays are uniform in {0, ..., max_staleness} rounds.
  int max_staleness = 0;
  std::uint64_t seed = 0;

  /// Throws ConfigError with "channel." field paths.
  void validate() const;
};

enum class ActivationMode { synchronous, randomized_pairwise, randomized_subset };

std::string_view to_string(ActivationMode mode);
ActivationMode parse_activation_mode(std::string_view name);

struct ActivationModel {
  ActivationMode mode = ActivationMode::synchronous;
  /// Per-node activation probability of randomized_subset.
  double p_active = 0.5;
  std::uint64_t seed = 0;

  /// Throws ConfigError with "activation." field paths.
  void validate() const;

  /// Active set of a round. Draws depend only on (seed, round, node/edge).
  std::vector<bool> draw(const Topology& topology, std::uint64_t round) const;
};

/// E[W^(s)] of the activation process. Pairwise activation has a closed form;
/// subset activation is enumerated exactly for N <= kExactEnumerationLimit and
/// estimated from `samples` draws otherwise.
Matrix expected_weights(const Topology& topology, const ActivationModel& activation,
                        int samples = 20000);
inline constexpr std::size_t kExactEnumerationLimit = 16;

struct RoundReport {
  std::uint64_t round = 0;
  std::size_t active_nodes = 0;
  /// Nodes whose trigger fired.
  std::size_t broadcasts = 0;
  /// Directed copies put on the wire (one per neighbor of a broadcasting node).
  std::size_t copies = 0;
  std::size_t dropped = 0;
  std::size_t delivered = 0;
};

/// Drives one global round of the gossip protocol over a topology:
///   1. draw the active set,
///   2. active nodes run the event trigger (every node is forced in round 0),
///   3. each broadcast is copied to every neighbor, dropped i.i.d. and delayed
///      uniformly in {0..max_staleness} (round 0 is lossless and immediate),
///   4. due packets are delivered in (sender, send round) order,
///   5. active nodes take one gossip step with the effective weight rows.
class Network {
 public:
  Network(Topology topology, CommsConfig comms, ChannelModel channel, ActivationModel activation);

  RoundReport schedule_round(std::span<AgentState> agents, std::uint32_t outer_iter,
                             std::uint32_t inner_step);

  /// Every copy put on the wire is appended to `out` (delivery round, or
  /// kDroppedRound, then receiver, then the encoded packet). Pass nullptr to stop.
  void set_trace_sink(std::ostream* out) noexcept { trace_ = out; }

  const Topology& topology() const noexcept { return topology_; }
  const GossipWeights& weights() const noexcept { return weights_; }
  const CommsConfig& comms() const noexcept { return comms_; }
  std::uint64_t rounds_elapsed() const noexcept { return round_; }
  /// Directed copies sent by each node so far.
  const std::vector<std::uint64_t>& copies_per_agent() const noexcept { return copies_; }
  std::size_t packets_in_flight() const noexcept { return in_flight_.size(); }

 private:
  struct InFlight {
    std::uint64_t due_round;
    std::uint64_t send_round;
    AgentId sender;
    AgentId receiver;
    Packet packet;
  };

  Topology topology_;
  CommsConfig comms_;
  ChannelModel channel_;
  ActivationModel activation_;
  GossipWeights weights_;
  std::vector<WeightRow> sync_rows_;
  std::vector<InFlight> in_flight_;
  std::vector<std::uint64_t> copies_;
  std::uint64_t round_ = 0;
  std::ostream* trace_ = nullptr;
};

/// sqrt(sum_j sum_i (z_ij - mean_i z_ij)^2) for rows z_i.
double consensus_residual(const Matrix& z_all);
double consensus_residual(std::span<const AgentState> agents);

/// Per-coordinate network mean of z.
Vector network_mean(std::span<const AgentState> agents);

}  // namespace gsink
