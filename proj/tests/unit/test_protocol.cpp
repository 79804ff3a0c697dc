#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include <gsink/protocol.hpp>
#include <gsink/wire.hpp>

#include "oracles.hpp"

using namespace gsink;

namespace {

AgentState agent_with_z(AgentId id, Vector z) {
  const auto kernel = build_gibbs_kernel(CostMatrix::squared_grid(static_cast<std::size_t>(z.size())), 0.5);
  AgentState a = AgentState::initial(id, kernel);
  a.z = std::move(z);
  return a;
}

}  // namespace

TEST(Quantizer, MatchesRoundingFormula) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> x(-35.0, 35.0);
  for (int bits : {1, 3, 8, 16}) {
    UniformQuantizer q(-30.0, 30.0, bits);
    const double dq = 60.0 / (2.0 * (std::pow(2.0, bits) - 1.0));
    EXPECT_DOUBLE_EQ(q.max_error(), dq);
    for (int t = 0; t < 2000; ++t) {
      const double v = x(gen);
      const double got = q.quantize(v);
      EXPECT_NEAR(got, oracle::quantize(v, -30.0, 30.0, bits), 1e-9);
      EXPECT_LE(std::abs(got - std::clamp(v, -30.0, 30.0)), dq + 1e-12);
      EXPECT_EQ(q.quantize(got), got);
    }
  }
}

TEST(Quantizer, EndpointsAreLevels) {
  UniformQuantizer q(-2.0, 6.0, 4);
  EXPECT_EQ(q.num_levels(), 16u);
  EXPECT_EQ(q.quantize(-2.0), -2.0);
  EXPECT_EQ(q.quantize(6.0), 6.0);
  EXPECT_THROW(UniformQuantizer(-1.0, 1.0, 0), InvalidArgument);
  EXPECT_THROW(UniformQuantizer(1.0, 1.0, 8), InvalidArgument);
}

TEST(Comms, ValidateNamesField) {
  CommsConfig c;
  c.delta = -1.0;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field_path(), "comms.delta");
  }
  c = CommsConfig{};
  c.bits = 40;
  EXPECT_THROW(c.validate(), ConfigError);
  c = CommsConfig{};
  c.s_min = 5.0;
  c.s_max = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Comms, MarginAndQuantizationError) {
  CommsConfig c;
  c.bits = std::nullopt;
  EXPECT_EQ(c.quantization_error(), 0.0);
  c.bits = 8;
  EXPECT_DOUBLE_EQ(c.quantization_error(), 60.0 / (2.0 * 255.0));
  c.outer_margin = 0.0;
  EXPECT_DOUBLE_EQ(c.outer_stop_threshold(), c.tau_outer);
  c.outer_margin.reset();
  EXPECT_DOUBLE_EQ(c.outer_stop_threshold(),
                   c.tau_outer + 2.0 * (c.tau_inner + c.delta + c.quantization_error()));
}

TEST(Trigger, FiresOnlyAboveDelta) {
  CommsConfig c;
  c.delta = 0.1;
  c.bits = std::nullopt;
  auto a = agent_with_z(0, Vector::Zero(4));
  ASSERT_TRUE(maybe_transmit(a, c, 0, 0));  // first evaluation always sends
  a.z(2) = 0.1;
  EXPECT_FALSE(maybe_transmit(a, c, 0, 1));
  a.z(2) = 0.1000001;
  EXPECT_TRUE(maybe_transmit(a, c, 0, 2));
  EXPECT_TRUE(maybe_transmit(a, c, 0, 3, true));
  EXPECT_EQ(a.messages_sent, 3u);
  EXPECT_NEAR(a.variation_accum, 0.1000001, 1e-12);
}

TEST(Trigger, PayloadIsClippedAndQuantized) {
  CommsConfig c;
  c.bits = 6;
  Vector z(3);
  z << -50.0, 0.3, 12.34;
  auto a = agent_with_z(1, z);
  const auto p = maybe_transmit(a, c, 2, 5);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->sender, 1u);
  EXPECT_TRUE(a.clip_active);
  EXPECT_EQ(p->payload(0), -30.0);
  const Vector clipped = clip_log(z, c.s_min, c.s_max);
  EXPECT_LE((p->payload - clipped).cwiseAbs().maxCoeff(), c.quantization_error() + 1e-12);
  EXPECT_EQ(a.z_last_tx, p->payload);
  EXPECT_EQ(a.trigger_reference, z);
}

TEST(Trigger, BudgetHoldsOnRandomWalk) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> step(0.0, 0.02);
  for (double delta : {1e-3, 1e-2, 5e-2}) {
    CommsConfig c;
    c.delta = delta;
    auto a = agent_with_z(0, Vector::Zero(5));
    for (int t = 0; t < 2000; ++t) {
      maybe_transmit(a, c, 0, static_cast<std::uint32_t>(t));
      for (Eigen::Index j = 0; j < 5; ++j) a.z(j) += step(gen);
    }
    EXPECT_LE(a.messages_sent, 1 + static_cast<std::uint64_t>(std::ceil(a.variation_accum / delta)));
  }
}

TEST(Cache, NewerPacketWins) {
  auto r = agent_with_z(0, Vector::Zero(2));
  Packet p1{3, 0, 0, Vector::Constant(2, 1.0)};
  Packet p2{3, 0, 1, Vector::Constant(2, 2.0)};
  EXPECT_TRUE(deliver(r, p2, 7));
  EXPECT_FALSE(deliver(r, p1, 5));
  EXPECT_FALSE(deliver(r, p1, 7));
  EXPECT_EQ(r.neighbor_cache.at(3).packet.payload(0), 2.0);
  EXPECT_TRUE(deliver(r, p1, 8));
  EXPECT_EQ(r.neighbor_cache.at(3).packet.payload(0), 1.0);
}

TEST(Gossip, WeightedCombinationOfCache) {
  auto a = agent_with_z(0, Vector::Constant(2, 3.0));
  deliver(a, Packet{1, 0, 0, Vector::Constant(2, 0.0)}, 0);
  deliver(a, Packet{2, 0, 0, Vector::Constant(2, 6.0)}, 0);
  gossip_step(a, WeightRow{0.5, {{1, 0.25}, {2, 0.25}}});
  EXPECT_NEAR(a.z(0), 3.0, 1e-15);
  EXPECT_NEAR(inner_gap(a), 3.0, 1e-15);
  EXPECT_THROW(gossip_step(a, WeightRow{0.5, {{9, 0.5}}}), InvalidArgument);
}

TEST(Protocol, ScalingUpdateAndProjection) {
  const auto kernel = build_gibbs_kernel(CostMatrix::squared_grid(6), 0.5);
  auto a = AgentState::initial(0, kernel);
  const auto mu = Histogram::uniform(6);
  local_scaling_update(a, mu, kernel, 1e-16);
  const Vector expected_u = mu.weights().array() / (kernel.entries * Vector::Ones(6)).array();
  EXPECT_LT((a.u - expected_u).cwiseAbs().maxCoeff(), 1e-14);
  const Vector expected_s = (kernel.entries.transpose() * a.u).array().log();
  EXPECT_LT((a.s - expected_s).cwiseAbs().maxCoeff(), 1e-12);
  reseed_inner(a);
  EXPECT_EQ(a.z, a.s);
  const double change = shared_projection(a);
  EXPECT_EQ(a.z, a.log_v);
  EXPECT_NEAR(change, a.log_v.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(node_barycenter(a).weights().sum(), 1.0, 1e-12);
  a.z(0) = 1e6;
  EXPECT_THROW(local_scaling_update(a, mu, kernel, 1e-16), NumericalError);
}

TEST(Protocol, OuterConvergedIsStrict) {
  CommsConfig c;
  c.tau_outer = 0.5;
  Vector a = Vector::Zero(3), b = Vector::Zero(3);
  b(1) = 0.5;
  EXPECT_FALSE(outer_converged(a, b, c));
  b(1) = 0.49;
  EXPECT_TRUE(outer_converged(a, b, c));
}

TEST(Wire, RoundTripQuantized) {
  CommsConfig c;
  c.bits = 12;
  Packet p{7, 3, 41, quantize(clip_log(Vector::LinSpaced(9, -40.0, 25.0), c.s_min, c.s_max), c)};
  const auto bytes = encode_packet(p, c);
  EXPECT_EQ(bytes.size(), wire_size(9, c));
  EXPECT_EQ(bytes.size(), kWireHeaderBytes + 9 * 2);
  std::size_t used = 0;
  const auto q = decode_packet(bytes, c, &used);
  EXPECT_EQ(used, bytes.size());
  EXPECT_EQ(q.sender, 7u);
  EXPECT_EQ(q.outer_iter, 3u);
  EXPECT_EQ(q.inner_step, 41u);
  EXPECT_LT((q.payload - p.payload).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Wire, RoundTripUnquantizedIsExact) {
  CommsConfig c;
  c.bits = std::nullopt;
  Packet p{1, 0, 0, Vector::LinSpaced(5, -1.234567, 9.87654321)};
  const auto bytes = encode_packet(p, c);
  EXPECT_EQ(bytes.size(), kWireHeaderBytes + 5 * 8);
  EXPECT_EQ(decode_packet(bytes, c).payload, p.payload);
  CommsConfig other;
  other.bits = 8;
  EXPECT_THROW(decode_packet(bytes, other), InvalidArgument);
  EXPECT_THROW(decode_packet(std::span(bytes).first(10), c), InvalidArgument);
}

TEST(Wire, TraceRecords) {
  CommsConfig c;
  std::stringstream buf;
  Packet p{2, 1, 1, Vector::Zero(3)};
  write_trace_record(buf, 5, 1, p, c);
  write_trace_record(buf, kDroppedRound, 3, p, c);
  const auto recs = read_packet_trace(buf, c);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].delivery_round, 5u);
  EXPECT_EQ(recs[1].delivery_round, kDroppedRound);
  EXPECT_EQ(recs[1].receiver, 3u);
}
