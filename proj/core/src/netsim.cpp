#include "gsink/netsim.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gsink/rng.hpp"
#include "gsink/wire.hpp"

namespace gsink {

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::grid2d: return "grid2d";
    case TopologyKind::ring: return "ring";
    case TopologyKind::path: return "path";
    case TopologyKind::complete: return "complete";
    case TopologyKind::random_geometric: return "random_geometric";
  }
  return "unknown";
}

TopologyKind parse_topology_kind(std::string_view name) {
  for (auto k : {TopologyKind::grid2d, TopologyKind::ring, TopologyKind::path,
                 TopologyKind::complete, TopologyKind::random_geometric}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown topology kind '" + std::string(name) + "'");
}

bool is_connected(std::size_t num_nodes, const std::vector<Topology::Edge>& edges) {
  if (num_nodes == 0) return false;
  std::vector<std::size_t> parent(num_nodes);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = num_nodes;
  for (const auto& [a, b] : edges) {
    const auto ra = find(a), rb = find(b);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components == 1;
}

Topology::Topology(std::size_t num_nodes, std::vector<Edge> edges, TopologyKind kind)
    : neighbors_(num_nodes), kind_(kind) {
  if (num_nodes == 0) throw TopologyError("topology needs at least one node");
  for (auto& [a, b] : edges) {
    if (a == b) throw TopologyError("self-loop at node " + std::to_string(a));
    if (a >= num_nodes || b >= num_nodes) throw TopologyError("edge endpoint out of range");
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (!is_connected(num_nodes, edges)) throw TopologyError("communication graph is not connected");
  edges_ = std::move(edges);
  for (const auto& [a, b] : edges_) {
    neighbors_[a].push_back(b);
    neighbors_[b].push_back(a);
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
}

std::size_t Topology::max_degree() const noexcept {
  std::size_t m = 0;
  for (const auto& nb : neighbors_) m = std::max(m, nb.size());
  return m;
}

namespace {

using Edge = Topology::Edge;

AgentId id(std::size_t i) { return static_cast<AgentId>(i); }

std::vector<Edge> grid_edges(std::size_t rows, std::size_t cols) {
  std::vector<Edge> e;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t n = r * cols + c;
      if (c + 1 < cols) e.emplace_back(id(n), id(n + 1));
      if (r + 1 < rows) e.emplace_back(id(n), id(n + cols));
    }
  }
  return e;
}

std::vector<Edge> geometric_edges(std::size_t n, double radius, std::uint64_t seed,
                                  std::uint64_t attempt) {
  StreamRng rng(seed, StreamTag::sampling, attempt);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform();
    y[i] = rng.uniform();
  }
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      if (std::hypot(x[i] - x[k], y[i] - y[k]) <= radius) e.emplace_back(id(i), id(k));
    }
  }
  return e;
}

}  // namespace

Topology build_topology(const TopologySpec& spec) {
  const std::size_t n = spec.num_nodes;
  std::vector<Edge> edges;
  switch (spec.kind) {
    case TopologyKind::grid2d:
      if (spec.rows == 0 || spec.cols == 0) throw TopologyError("grid2d needs rows, cols >= 1");
      return Topology(spec.rows * spec.cols, grid_edges(spec.rows, spec.cols), spec.kind);
    case TopologyKind::ring:
      if (n < 3) throw TopologyError("ring needs at least 3 nodes");
      for (std::size_t i = 0; i < n; ++i) edges.emplace_back(id(i), id((i + 1) % n));
      break;
    case TopologyKind::path:
      for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(id(i), id(i + 1));
      break;
    case TopologyKind::complete:
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i + 1; k < n; ++k) edges.emplace_back(id(i), id(k));
      break;
    case TopologyKind::random_geometric: {
      if (!(spec.radius > 0.0)) throw TopologyError("random_geometric needs radius > 0");
      for (int a = 0; a < spec.max_attempts; ++a) {
        auto e = geometric_edges(n, spec.radius, spec.seed, static_cast<std::uint64_t>(a));
        if (is_connected(n, e)) return Topology(n, std::move(e), spec.kind);
      }
      std::ostringstream msg;
      msg << "random_geometric graph with N=" << n << ", radius=" << spec.radius
          << " still disconnected after " << spec.max_attempts << " attempts";
      throw TopologyError(msg.str());
    }
  }
  return Topology(n, std::move(edges), spec.kind);
}

GossipWeights metropolis_weights(const Topology& topology) {
  const std::vector<bool> all(topology.num_nodes(), true);
  GossipWeights gw;
  gw.w = subgraph_metropolis(topology, all);
  gw.sigma2 = spectral_gap(gw.w).sigma2;
  double beta = 1.0;
  for (Eigen::Index i = 0; i < gw.w.rows(); ++i)
    for (Eigen::Index k = 0; k < gw.w.cols(); ++k)
      if (gw.w(i, k) > 0.0) beta = std::min(beta, gw.w(i, k));
  gw.beta = beta;
  return gw;
}

SpectralInfo spectral_gap(const Matrix& w) {
  if (w.rows() != w.cols() || w.rows() == 0) throw InvalidArgument("spectral_gap: square matrix expected");
  const auto n = static_cast<double>(w.rows());
  const Matrix centered = w - Matrix::Constant(w.rows(), w.cols(), 1.0 / n);
  Eigen::BDCSVD<Matrix> svd(centered);
  SpectralInfo info;
  info.sigma2 = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  info.gap = 1.0 - info.sigma2;
  return info;
}

std::vector<WeightRow> subgraph_metropolis_rows(const Topology& topology,
                                                const std::vector<bool>& active) {
  const std::size_t n = topology.num_nodes();
  if (active.size() != n) throw InvalidArgument("active mask size does not match the topology");
  std::vector<std::size_t> deg(n, 0);
  for (const auto& [a, b] : topology.edges()) {
    if (active[a] && active[b]) {
      ++deg[a];
      ++deg[b];
    }
  }
  std::vector<WeightRow> rows(n);
  for (const auto& [a, b] : topology.edges()) {
    if (!(active[a] && active[b])) continue;
    const double w = 1.0 / (1.0 + static_cast<double>(std::max(deg[a], deg[b])));
    rows[a].neighbors.emplace_back(b, w);
    rows[b].neighbors.emplace_back(a, w);
  }
  for (auto& row : rows) {
    std::sort(row.neighbors.begin(), row.neighbors.end());
    double off = 0.0;
    for (const auto& [k, w] : row.neighbors) off += w;
    row.self_weight = 1.0 - off;
  }
  return rows;
}

Matrix subgraph_metropolis(const Topology& topology, const std::vector<bool>& active) {
  const auto n = static_cast<Eigen::Index>(topology.num_nodes());
  Matrix w = Matrix::Zero(n, n);
  const auto rows = subgraph_metropolis_rows(topology, active);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i, i) = rows[static_cast<std::size_t>(i)].self_weight;
    for (const auto& [k, v] : rows[static_cast<std::size_t>(i)].neighbors) w(i, k) = v;
  }
  return w;
}

void ChannelModel::validate() const {
  if (!(drop_prob >= 0.0 && drop_prob < 1.0)) {
    throw ConfigError("channel.drop_prob", "must lie in [0, 1)");
  }
  if (max_staleness < 0) throw ConfigError("channel.max_staleness", "must be >= 0");
}

std::string_view to_string(ActivationMode mode) {
  switch (mode) {
    case ActivationMode::synchronous: return "synchronous";
    case ActivationMode::randomized_pairwise: return "randomized_pairwise";
    case ActivationMode::randomized_subset: return "randomized_subset";
  }
  return "unknown";
}

ActivationMode parse_activation_mode(std::string_view name) {
  for (auto m : {ActivationMode::synchronous, ActivationMode::randomized_pairwise,
                 ActivationMode::randomized_subset}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown activation mode '" + std::string(name) + "'");
}

void ActivationModel::validate() const {
  if (mode == ActivationMode::randomized_subset && !(p_active > 0.0 && p_active <= 1.0)) {
    throw ConfigError("activation.p_active", "must lie in (0, 1]");
  }
}

std::vector<bool> ActivationModel::draw(const Topology& topology, std::uint64_t round) const {
  const std::size_t n = topology.num_nodes();
  switch (mode) {
    case ActivationMode::synchronous:
      return std::vector<bool>(n, true);
    case ActivationMode::randomized_pairwise: {
      std::vector<bool> active(n, false);
      const auto e = stream_below(seed, StreamTag::pairwise_edge, topology.num_edges(), {round});
      const auto& [a, b] = topology.edges()[e];
      active[a] = active[b] = true;
      return active;
    }
    case ActivationMode::randomized_subset: {
      std::vector<bool> active(n);
      for (std::size_t i = 0; i < n; ++i) {
        active[i] = stream_uniform(seed, StreamTag::activation, {round, i}) < p_active;
      }
      return active;
    }
  }
  return std::vector<bool>(n, true);
}

Matrix expected_weights(const Topology& topology, const ActivationModel& activation, int samples) {
  const std::size_t n = topology.num_nodes();
  const auto ni = static_cast<Eigen::Index>(n);
  switch (activation.mode) {
    case ActivationMode::synchronous:
      return metropolis_weights(topology).w;
    case ActivationMode::randomized_pairwise: {
      // Each edge is picked w.p. 1/|E| and averages its endpoints with weight 1/2.
      Matrix w = Matrix::Identity(ni, ni);
      const double p = 0.5 / static_cast<double>(topology.num_edges());
      for (const auto& [a, b] : topology.edges()) {
        w(a, a) -= p;
        w(b, b) -= p;
        w(a, b) += p;
        w(b, a) += p;
      }
      return w;
    }
    case ActivationMode::randomized_subset: {
      Matrix acc = Matrix::Zero(ni, ni);
      const double p = activation.p_active;
      if (n <= kExactEnumerationLimit) {
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
          std::vector<bool> active(n);
          double prob = 1.0;
          for (std::size_t i = 0; i < n; ++i) {
            active[i] = (mask >> i) & 1u;
            prob *= active[i] ? p : 1.0 - p;
          }
          if (prob == 0.0) continue;
          acc += prob * subgraph_metropolis(topology, active);
        }
        return acc;
      }
      if (samples <= 0) throw InvalidArgument("expected_weights: samples must be positive");
      for (int s = 0; s < samples; ++s) {
        acc += subgraph_metropolis(topology, activation.draw(topology, static_cast<std::uint64_t>(s)));
      }
      return acc / static_cast<double>(samples);
    }
  }
  return Matrix::Identity(ni, ni);
}

Network::Network(Topology topology, CommsConfig comms, ChannelModel channel,
                 ActivationModel activation)
    : topology_(std::move(topology)),
      comms_(comms),
      channel_(channel),
      activation_(activation),
      weights_(metropolis_weights(topology_)),
      sync_rows_(subgraph_metropolis_rows(topology_, std::vector<bool>(topology_.num_nodes(), true))),
      copies_(topology_.num_nodes(), 0) {
  comms_.validate();
  channel_.validate();
  activation_.validate();
}

RoundReport Network::schedule_round(std::span<AgentState> agents, std::uint32_t outer_iter,
                                    std::uint32_t inner_step) {
  const std::size_t n = topology_.num_nodes();
  if (agents.size() != n) throw InvalidArgument("schedule_round: agent count does not match the topology");
  RoundReport report;
  report.round = round_;
  const bool bootstrap = round_ == 0;

  const std::vector<bool> active =
      bootstrap ? std::vector<bool>(n, true) : activation_.draw(topology_, round_);

  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    ++report.active_nodes;
    auto packet = maybe_transmit(agents[i], comms_, outer_iter, inner_step, bootstrap);
    if (!packet) continue;
    ++report.broadcasts;
    for (AgentId k : topology_.neighbors(id(i))) {
      ++report.copies;
      ++copies_[i];
      bool dropped = false;
      std::uint64_t delay = 0;
      if (!bootstrap) {
        dropped = channel_.drop_prob > 0.0 &&
                  stream_uniform(channel_.seed, StreamTag::drop, {round_, i, k}) < channel_.drop_prob;
        if (channel_.max_staleness > 0) {
          delay = stream_below(channel_.seed, StreamTag::delay,
                               static_cast<std::uint64_t>(channel_.max_staleness) + 1, {round_, i, k});
        }
      }
      if (trace_) {
        const auto due = dropped ? kDroppedRound : static_cast<std::uint32_t>(round_ + delay);
        write_trace_record(*trace_, due, k, *packet, comms_);
      }
      if (dropped) {
        ++report.dropped;
        continue;
      }
      in_flight_.push_back({round_ + delay, round_, id(i), k, *packet});
    }
  }

  // Deliver due packets in a fixed order so results never depend on container layout.
  auto split = std::stable_partition(in_flight_.begin(), in_flight_.end(),
                                     [&](const InFlight& p) { return p.due_round > round_; });
  std::vector<InFlight> due(std::make_move_iterator(split), std::make_move_iterator(in_flight_.end()));
  in_flight_.erase(split, in_flight_.end());
  std::sort(due.begin(), due.end(), [](const InFlight& a, const InFlight& b) {
    return std::tie(a.sender, a.send_round, a.receiver) < std::tie(b.sender, b.send_round, b.receiver);
  });
  for (auto& p : due) {
    deliver(agents[p.receiver], p.packet, p.send_round);
    ++report.delivered;
  }

  if (activation_.mode == ActivationMode::synchronous || bootstrap) {
    for (std::size_t i = 0; i < n; ++i) gossip_step(agents[i], sync_rows_[i]);
  } else {
    const auto rows = subgraph_metropolis_rows(topology_, active);
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i]) gossip_step(agents[i], rows[i]);
    }
  }
  ++round_;
  return report;
}

double consensus_residual(const Matrix& z_all) {
  if (z_all.rows() == 0) return 0.0;
  const Eigen::RowVectorXd mean = z_all.colwise().mean();
  return std::sqrt((z_all.rowwise() - mean).squaredNorm());
}

double consensus_residual(std::span<const AgentState> agents) {
  if (agents.empty()) return 0.0;
  const Vector mean = network_mean(agents);
  double sq = 0.0;
  for (const auto& a : agents) sq += (a.z - mean).squaredNorm();
  return std::sqrt(sq);
}

Vector network_mean(std::span<const AgentState> agents) {
  if (agents.empty()) return Vector();
  Vector mean = Vector::Zero(agents.front().z.size());
  for (const auto& a : agents) mean += a.z;
  return mean / static_cast<double>(agents.size());
}

}  // namespace gsink
