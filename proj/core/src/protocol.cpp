#include "gsink/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gsink {

// ---------------------------------------------------------------------------
// CommsConfig

double CommsConfig::quantization_error() const {
  if (!bits) return 0.0;
  const double levels_minus_one = std::ldexp(1.0, *bits) - 1.0;
  return (s_max - s_min) / (2.0 * levels_minus_one);
}

double CommsConfig::outer_stop_threshold() const {
  const double margin =
      outer_margin.value_or(2.0 * (tau_inner + delta + quantization_error()));
  return tau_outer + margin;
}

void CommsConfig::validate() const {
  if (!(delta >= 0.0) || std::isnan(delta)) throw ConfigError("comms.delta", "must be >= 0");
  if (!(tau_inner > 0.0) || !std::isfinite(tau_inner)) {
    throw ConfigError("comms.tau_inner", "must be finite and > 0");
  }
  if (!(tau_outer > 0.0) || !std::isfinite(tau_outer)) {
    throw ConfigError("comms.tau_outer", "must be finite and > 0");
  }
  if (bits && (*bits < 1 || *bits > kMaxBits)) {
    throw ConfigError("comms.bits", "must be in [1, 32] or \"unquantized\"");
  }
  if (!std::isfinite(s_min)) throw ConfigError("comms.s_min", "must be finite");
  if (!std::isfinite(s_max)) throw ConfigError("comms.s_max", "must be finite");
  if (!(s_min < s_max)) throw ConfigError("comms.s_max", "must be greater than s_min");
  if (inner_step_cap < 1) throw ConfigError("comms.inner_step_cap", "must be >= 1");
  if (outer_iter_cap < 1) throw ConfigError("comms.outer_iter_cap", "must be >= 1");
  if (outer_margin && (!(*outer_margin >= 0.0) || !std::isfinite(*outer_margin))) {
    throw ConfigError("comms.outer_margin", "must be finite and >= 0, or \"auto\"");
  }
}

// ---------------------------------------------------------------------------
// Quantizer

UniformQuantizer::UniformQuantizer(double s_min, double s_max, int bits)
    : s_min_(s_min), s_max_(s_max), bits_(bits) {
  if (!(s_min < s_max) || !std::isfinite(s_min) || !std::isfinite(s_max)) {
    throw InvalidArgument("UniformQuantizer: need finite s_min < s_max");
  }
  if (bits < 1 || bits > CommsConfig::kMaxBits) {
    throw InvalidArgument("UniformQuantizer: bits must be in [1, 32]");
  }
  levels_ = std::uint64_t{1} << bits;
  step_ = (s_max - s_min) / static_cast<double>(levels_ - 1);
}

std::uint64_t UniformQuantizer::index(double value) const {
  const double clamped = std::clamp(value, s_min_, s_max_);
  const double t = (clamped - s_min_) / step_;
  double k = std::floor(t);
  if (t - k > 0.5) k += 1.0;
  const double top = static_cast<double>(levels_ - 1);
  return static_cast<std::uint64_t>(std::clamp(k, 0.0, top));
}

double UniformQuantizer::level(std::uint64_t k) const {
  if (k >= levels_ - 1) return s_max_;
  return s_min_ + static_cast<double>(k) * step_;
}

Vector clip_log(const Vector& values, double s_min, double s_max) {
  if (!(s_min < s_max)) throw InvalidArgument("clip_log: need s_min < s_max");
  return values.cwiseMax(s_min).cwiseMin(s_max);
}

Vector quantize(const Vector& clipped, const CommsConfig& config) {
  if (!config.bits) return clipped;
  const UniformQuantizer q(config.s_min, config.s_max, *config.bits);
  Vector out(clipped.size());
  for (Eigen::Index j = 0; j < clipped.size(); ++j) out(j) = q.quantize(clipped(j));
  return out;
}

// ---------------------------------------------------------------------------
// Agent state machine

AgentState AgentState::initial(AgentId id, const GibbsKernel& kernel) {
  const auto d = static_cast<Eigen::Index>(kernel.size());
  AgentState state;
  state.id = id;
  state.u = Vector::Ones(d);
  state.s = log_message(state.u, kernel);
  state.z = Vector::Zero(d);
  state.log_v = Vector::Zero(d);
  return state;
}

void local_scaling_update(AgentState& state, const Histogram& mu, const GibbsKernel& kernel,
                          double ridge) {
  if (!state.z.allFinite()) {
    std::ostringstream msg;
    msg << "agent " << state.id << ": z has non-finite entries";
    throw NumericalError(msg.str());
  }
  try {
    state.u = scaling_from_log_v(mu, kernel, ridge, state.z);
    state.s = log_message(state.u, kernel);
  } catch (const NumericalError& e) {
    std::ostringstream msg;
    msg << "agent " << state.id << ": " << e.what();
    throw NumericalError(msg.str());
  }
}

void reseed_inner(AgentState& state) { state.z = state.s; }

std::optional<Packet> maybe_transmit(AgentState& state, const CommsConfig& config,
                                     std::uint32_t outer_iter, std::uint32_t inner_step,
                                     bool force) {
  if (!state.z.allFinite()) {
    std::ostringstream msg;
    msg << "agent " << state.id << ": cannot transmit non-finite z";
    throw NumericalError(msg.str());
  }
  if (state.last_checked_z) {
    state.variation_accum += (state.z - *state.last_checked_z).lpNorm<Eigen::Infinity>();
  }
  state.last_checked_z = state.z;

  const bool never_sent = state.trigger_reference.size() == 0;
  const bool fire =
      force || never_sent ||
      (state.z - state.trigger_reference).lpNorm<Eigen::Infinity>() > config.delta;
  if (!fire) return std::nullopt;

  const Vector clipped = clip_log(state.z, config.s_min, config.s_max);
  if (clipped != state.z) state.clip_active = true;
  Packet packet{state.id, outer_iter, inner_step, quantize(clipped, config)};
  state.z_last_tx = packet.payload;
  state.trigger_reference = state.z;
  ++state.messages_sent;
  return packet;
}

bool deliver(AgentState& receiver, const Packet& packet, std::uint64_t send_round) {
  auto it = receiver.neighbor_cache.find(packet.sender);
  if (it != receiver.neighbor_cache.end() && it->second.send_round >= send_round) return false;
  receiver.neighbor_cache.insert_or_assign(packet.sender, CachedPacket{packet, send_round});
  return true;
}

void gossip_step(AgentState& state, const WeightRow& row) {
  Vector next = row.self_weight * state.z;
  for (const auto& [k, w] : row.neighbors) {
    if (w == 0.0) continue;
    auto it = state.neighbor_cache.find(k);
    if (it == state.neighbor_cache.end()) {
      std::ostringstream msg;
      msg << "gossip_step: agent " << state.id << " has no cached packet from neighbor " << k;
      throw InvalidArgument(msg.str());
    }
    next.noalias() += w * it->second.packet.payload;
  }
  state.z = std::move(next);
}

double inner_gap(const AgentState& state) {
  double gap = 0.0;
  for (const auto& [k, entry] : state.neighbor_cache) {
    gap = std::max(gap, (state.z - entry.packet.payload).lpNorm<Eigen::Infinity>());
  }
  return gap;
}

bool inner_converged(const AgentState& state, const CommsConfig& config) {
  return inner_gap(state) < config.tau_inner;
}

bool outer_converged(const Vector& log_v_prev, const Vector& log_v_curr,
                     const CommsConfig& config) {
  if (log_v_prev.size() != log_v_curr.size()) {
    throw InvalidArgument("outer_converged: size mismatch");
  }
  return (log_v_curr - log_v_prev).lpNorm<Eigen::Infinity>() < config.tau_outer;
}

double shared_projection(AgentState& state) {
  Vector next = balance_log_scale(state.log_v, state.z);
  const double change = (next - state.log_v).lpNorm<Eigen::Infinity>();
  state.log_v = next;
  state.z = std::move(next);
  return change;
}

Histogram node_barycenter(const AgentState& state) { return softmax_normalize(state.log_v); }

}  // namespace gsink
