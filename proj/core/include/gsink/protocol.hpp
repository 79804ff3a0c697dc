#pragma once

// Per-agent state machine of the decentralized log-gossip scaling scheme:
// local scaling, event-triggered transmission of clipped and quantized
// log-values, cached-neighbor gossip and the local stopping tests.

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "gsink/ot_core.hpp"
#include "gsink/types.hpp"

namespace gsink {

struct CommsConfig {
  /// Event-trigger threshold on the sup-norm change since the last broadcast.
  double delta = 1e-3;
  double tau_inner = 1e-4;
  double tau_outer = 1e-6;
  /// Quantizer width; std::nullopt transmits raw doubles.
  std::optional<int> bits = 16;
  double s_min = -30.0;
  double s_max = 30.0;
  int inner_step_cap = 200;
  int outer_iter_cap = 500;
  /// Extra slack added to tau_outer by the run driver. std::nullopt selects
  /// 2 (tau_inner + delta + quantization_error()), the per-iteration
  /// perturbation floor of a triggered, quantized run.
  std::optional<double> outer_margin;

  static constexpr int kMaxBits = 32;

  /// (s_max - s_min) / (2 (2^bits - 1)), or 0 when unquantized.
  double quantization_error() const;
  /// tau_outer plus the resolved outer margin.
  double outer_stop_threshold() const;
  bool quantized() const noexcept { return bits.has_value(); }

  /// Throws ConfigError naming the offending field (prefixed "comms.").
  void validate() const;
};

/// Uniform quantizer with 2^bits levels s_min + k (s_max - s_min) / (2^bits - 1),
/// endpoints included. Values are rounded to the nearest level, ties to the lower one.
class UniformQuantizer {
 public:
  UniformQuantizer(double s_min, double s_max, int bits);

  std::uint64_t num_levels() const noexcept { return levels_; }
  double step() const noexcept { return step_; }
  /// Worst-case per-entry error, step / 2.
  double max_error() const noexcept { return 0.5 * step_; }
  int bits() const noexcept { return bits_; }
  double lower() const noexcept { return s_min_; }
  double upper() const noexcept { return s_max_; }

  /// Level index of a value in [s_min, s_max] (values outside are clamped).
  std::uint64_t index(double value) const;
  double level(std::uint64_t k) const;
  double quantize(double value) const { return level(index(value)); }

 private:
  double s_min_;
  double s_max_;
  int bits_;
  std::uint64_t levels_;
  double step_;
};

/// Elementwise clamp into [s_min, s_max]. The input is left untouched.
Vector clip_log(const Vector& values, double s_min, double s_max);

/// Maps every entry of an already clipped vector to its nearest reconstruction
/// level. Identity when the config is unquantized.
Vector quantize(const Vector& clipped, const CommsConfig& config);

struct Packet {
  AgentId sender = 0;
  std::uint32_t outer_iter = 0;
  std::uint32_t inner_step = 0;
  /// Reconstruction values, one per support point.
  Vector payload;
};

struct CachedPacket {
  Packet packet;
  /// Global round in which the packet was sent; newer packets win.
  std::uint64_t send_round = 0;
};

struct AgentState {
  AgentId id = 0;
  /// Scaling vector mu / (K v + ridge).
  Vector u;
  /// Own log-message log(K^T u), full precision.
  Vector s;
  /// Gossip estimate of the network mean of s. Between outer iterations it
  /// holds the node's shared log v.
  Vector z;
  /// log v from the previous shared projection.
  Vector log_v;
  /// Payload of the most recent broadcast (post clip and quantization).
  Vector z_last_tx;
  /// Full-precision z at the most recent broadcast; the event trigger
  /// compares against this value.
  Vector trigger_reference;
  std::map<AgentId, CachedPacket> neighbor_cache;
  std::uint64_t messages_sent = 0;
  /// Cumulative sup-norm variation of the sequence of z values presented to
  /// the trigger.
  double variation_accum = 0.0;
  /// z at the previous trigger evaluation.
  std::optional<Vector> last_checked_z;
  /// Set once any broadcast had an entry clipped.
  bool clip_active = false;

  /// u = 1, s = log(K^T 1), z = log v = 0.
  static AgentState initial(AgentId id, const GibbsKernel& kernel);
};

/// v = exp(z), u = mu / (K v + ridge), s = log(K^T u).
/// Throws NumericalError if exp(z) overflows.
void local_scaling_update(AgentState& state, const Histogram& mu, const GibbsKernel& kernel,
                          double ridge);

/// z <- s.
void reseed_inner(AgentState& state);

/// Transmits when ||z - trigger_reference||_inf > delta (strictly), or when
/// `force` is set. A transmitted packet carries quantize(clip_log(z)).
std::optional<Packet> maybe_transmit(AgentState& state, const CommsConfig& config,
                                     std::uint32_t outer_iter, std::uint32_t inner_step,
                                     bool force = false);

/// Installs a packet in the receiver's cache unless a newer one (by send
/// round) is already there. Returns true when the cache changed.
bool deliver(AgentState& receiver, const Packet& packet, std::uint64_t send_round);

/// One row of an averaging matrix restricted to its support.
struct WeightRow {
  double self_weight = 1.0;
  std::vector<std::pair<AgentId, double>> neighbors;
};

/// z <- w_ii z + sum_k w_ik (cached payload of k). Throws InvalidArgument if a
/// positive-weight neighbor has no cached packet.
void gossip_step(AgentState& state, const WeightRow& row);

/// max_k ||z - cached payload of k||_inf over the cache (0 when empty).
double inner_gap(const AgentState& state);
bool inner_converged(const AgentState& state, const CommsConfig& config);

/// ||log_v_curr - log_v_prev||_inf < tau_outer.
bool outer_converged(const Vector& log_v_prev, const Vector& log_v_curr,
                     const CommsConfig& config);

/// Forms the node's shared iterate from z (scale-balanced against the previous
/// log v), stores it in both log_v and z, and returns the sup-norm change of log v.
double shared_projection(AgentState& state);

/// softmax(log v) of the node.
Histogram node_barycenter(const AgentState& state);

}  // namespace gsink
