#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include <gsink/config.hpp>
#include <gsink/densities.hpp>
#include <gsink/rng.hpp>
#include <gsink/stats.hpp>

using namespace gsink;

TEST(Rng, StreamsAreIndependentAndRepeatable) {
  EXPECT_EQ(stream_hash(1, StreamTag::drop, {2, 3}), stream_hash(1, StreamTag::drop, {2, 3}));
  EXPECT_NE(stream_hash(1, StreamTag::drop, {2, 3}), stream_hash(1, StreamTag::delay, {2, 3}));
  EXPECT_NE(stream_hash(1, StreamTag::drop, {2, 3}), stream_hash(1, StreamTag::drop, {3, 2}));
  StreamRng a(5, StreamTag::sampling), b(5, StreamTag::sampling);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
    sum += x;
  }
  EXPECT_NEAR(sum / 20000, 0.5, 0.01);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 500; ++i) seen.insert(a.below(3));
  EXPECT_EQ(seen, (std::set<std::uint64_t>{0, 1, 2}));
}

TEST(Densities, GridAndNormalization) {
  const Vector x = support_grid(5);
  EXPECT_DOUBLE_EQ(x(0), 0.0);
  EXPECT_DOUBLE_EQ(x(4), 1.0);
  EXPECT_DOUBLE_EQ(x(1), 0.25);
  const auto h = discretize(MixtureParams{}, 33);
  EXPECT_NEAR(h.weights().sum(), 1.0, 1e-12);
  EXPECT_NEAR(h[8] / h[24], 1.0, 1e-12);  // symmetric default mixture
}

TEST(Densities, DrawsRespectPriorAndSeeds) {
  const MixturePrior prior;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto p = draw_mixture(1, 3, i, prior);
    EXPECT_GE(p.mean1, prior.mean_lo);
    EXPECT_LE(p.mean2, prior.mean_hi);
    EXPECT_GE(p.width1, prior.width_lo);
    EXPECT_LE(p.width2, prior.width_hi);
    EXPECT_GE(p.weight, prior.weight_lo);
    EXPECT_LE(p.weight, prior.weight_hi);
  }
  EXPECT_EQ(draw_mixture(1, 3, 0).mean1, draw_mixture(1, 3, 0).mean1);
  EXPECT_NE(draw_mixture(1, 3, 0).mean1, draw_mixture(1, 4, 0).mean1);
  EXPECT_NE(draw_mixture(1, 3, 0).mean1, draw_mixture(2, 3, 0).mean1);
}

TEST(Densities, AggregateBins) {
  Vector w(6);
  w << 0.1, 0.2, 0.3, 0.1, 0.2, 0.1;
  const auto c = aggregate_bins(Histogram(w), 3);
  EXPECT_NEAR(c[0], 0.3, 1e-15);
  EXPECT_NEAR(c[1], 0.4, 1e-15);
  EXPECT_NEAR(c[2], 0.3, 1e-15);
  EXPECT_THROW(aggregate_bins(Histogram(w), 7), InvalidArgument);
}

TEST(Stats, StudentTQuantileAndCi) {
  EXPECT_NEAR(student_t_quantile(0.05, 4), 2.7764451052, 1e-8);
  EXPECT_NEAR(student_t_quantile(0.05, 1e6), 1.959966, 1e-5);
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0, 5.0};
  const auto ci = mean_ci95(xs);
  EXPECT_DOUBLE_EQ(ci.mean, 3.0);
  EXPECT_NEAR(ci.half_width, 2.7764451052 * std::sqrt(2.5 / 5.0), 1e-8);
  EXPECT_EQ(mean_ci95(std::vector<double>{7.0}).half_width, 0.0);
}

TEST(Stats, Fits) {
  const std::vector<double> x{1, 2, 4, 8}, y{3, 12, 48, 192};
  const auto f = loglog_fit(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  const auto g = least_squares(std::vector<double>{0, 1, 2}, std::vector<double>{1, 3, 5});
  EXPECT_NEAR(g.slope, 2.0, 1e-12);
  EXPECT_NEAR(g.intercept, 1.0, 1e-12);
  EXPECT_THROW(least_squares(std::vector<double>{1, 1}, std::vector<double>{0, 1}), InvalidArgument);
}

namespace {

std::string field_of(const std::string& json, std::vector<std::string> overrides = {}) {
  try {
    parse_run_config(json, overrides);
  } catch (const ConfigError& e) {
    return e.field_path();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsAndRoundTrip) {
  const auto c = parse_run_config("{}");
  EXPECT_EQ(c.problem.d, 64u);
  EXPECT_EQ(c.network.num_nodes, 16u);
  EXPECT_EQ(c.seeds.size(), 5u);
  const auto again = parse_run_config(to_json_text(c));
  EXPECT_EQ(to_json_text(again), to_json_text(c));
}

TEST(Config, Overrides) {
  const std::vector<std::string> ov{"comms.delta=0", "comms.bits=unquantized", "network.N=9", "seeds=[7]",
                                    "activation.mode=randomized_subset"};
  const auto c = parse_run_config(R"({"comms": {"bits": 8}})", ov);
  EXPECT_EQ(c.comms.delta, 0.0);
  EXPECT_FALSE(c.comms.bits);
  EXPECT_EQ(c.network.num_nodes, 9u);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{7}));
  EXPECT_EQ(c.activation.mode, ActivationMode::randomized_subset);
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(field_of(R"({"problem": {"epsilon": -1}})"), "problem.epsilon");
  EXPECT_EQ(field_of(R"({"problem": {"bogus": 1}})"), "problem.bogus");
  EXPECT_EQ(field_of("{}", {"channel.drop_prob=1.5"}), "channel.drop_prob");
  EXPECT_EQ(field_of("{}", {"network.topology_kind=torus"}), "network.topology_kind");
  EXPECT_EQ(field_of(R"({"seeds": []})"), "seeds");
  EXPECT_EQ(field_of("{}", {"comms.tau_inner=0"}), "comms.tau_inner");
  EXPECT_EQ(field_of("{}", {"nonsense"}), "nonsense");
  EXPECT_THROW(parse_run_config("{not json"), ConfigError);
}

TEST(Config, InstanceIsSeeded) {
  const auto c = parse_run_config("{}", std::vector<std::string>{"problem.d=16", "network.N=4"});
  const auto a = make_instance(c, 0), b = make_instance(c, 0), other = make_instance(c, 1);
  EXPECT_EQ(a.num_agents(), 4u);
  EXPECT_EQ(a.histograms()[2].weights(), b.histograms()[2].weights());
  EXPECT_NE(a.histograms()[2].weights(), other.histograms()[2].weights());
  const auto topo = build_topology(c.topology_spec());
  EXPECT_EQ(topo.num_nodes(), 4u);
  EXPECT_EQ(topo.num_edges(), 4u);
}
