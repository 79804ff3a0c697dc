#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include <gsink/densities.hpp>
#include <gsink/ot_core.hpp>

#include "oracles.hpp"

using namespace gsink;

namespace {

ProblemInstance mixture_instance(std::size_t d, std::size_t n, double eps, std::uint64_t seed = 0) {
  return ProblemInstance(CostMatrix::squared_grid(d), eps, 1e-16, mixture_histograms(n, d, 1, seed));
}

std::vector<oracle::Vec> weights_of(const std::vector<Histogram>& hs) {
  std::vector<oracle::Vec> out;
  for (const auto& h : hs) out.push_back(h.weights());
  return out;
}

}  // namespace

TEST(Histogram, RejectsBadInput) {
  EXPECT_THROW(Histogram(Vector::Constant(3, 0.5)), InvalidArgument);
  Vector neg(2);
  neg << 1.5, -0.5;
  EXPECT_THROW(Histogram{neg}, InvalidArgument);
  EXPECT_THROW(Histogram::from_unnormalized(Vector::Zero(3)), InvalidArgument);
  EXPECT_NEAR(Histogram::uniform(4)[2], 0.25, 1e-15);
}

TEST(GibbsKernel, RejectsNonpositiveEpsilon) {
  EXPECT_THROW(build_gibbs_kernel(CostMatrix::squared_grid(8), 0.0), InvalidArgument);
  EXPECT_THROW(build_gibbs_kernel(CostMatrix::squared_grid(8), -1.0), InvalidArgument);
}

TEST(GibbsKernel, UnderflowIsReported) {
  Matrix c = Matrix::Constant(3, 3, 1.0);
  EXPECT_THROW(build_gibbs_kernel(CostMatrix(c), 1e-4), NumericalError);
}

TEST(OtCore, SymmetricTwoPointInstance) {
  Matrix c(2, 2);
  c << 0, 1, 1, 0;
  Vector a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  ProblemInstance inst(CostMatrix(c), 1.0, 1e-16, {Histogram(a), Histogram(b)});
  const auto r = centralized_barycenter(inst, 1e-12, 1000);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.barycenter[0], 0.5, 1e-10);
  EXPECT_NEAR(r.barycenter[1], 0.5, 1e-10);
}

TEST(OtCore, MatchesLinearDomainIteration) {
  for (double eps : {0.05, 0.1, 0.5}) {
    const auto inst = mixture_instance(24, 5, eps, 3);
    const auto r = centralized_barycenter(inst, 1e-13, 20000);
    ASSERT_TRUE(r.converged);
    const auto ref = oracle::naive_ibp(weights_of(inst.histograms()), inst.cost().entries(), eps, 20000);
    EXPECT_LT((r.barycenter.weights() - ref).cwiseAbs().maxCoeff(), 1e-9) << "eps=" << eps;
  }
}

TEST(OtCore, SimplexPreservation) {
  const auto inst = mixture_instance(32, 4, 0.1);
  const auto r = centralized_barycenter(inst, 1e-10, 5000);
  EXPECT_NEAR(r.barycenter.weights().sum(), 1.0, 1e-12);
  EXPECT_GE(r.barycenter.weights().minCoeff(), 0.0);
  Vector big = Vector::LinSpaced(10, -700.0, 700.0);
  const auto h = softmax_normalize(big);
  EXPECT_NEAR(h.weights().sum(), 1.0, 1e-12);
  EXPECT_NEAR(h[9], 1.0, 1e-12);
}

TEST(OtCore, LogAverageEqualsGeometricMean) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> pos(0.05, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 2 + gen() % 7, n = 1 + gen() % 4;
    const auto kernel = build_gibbs_kernel(CostMatrix::squared_grid(d), 0.3);
    Vector mean_log = Vector::Zero(static_cast<Eigen::Index>(d));
    Vector prod = Vector::Ones(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
      Vector u = Vector::NullaryExpr(static_cast<Eigen::Index>(d), [&] { return pos(gen); });
      mean_log += log_message(u, kernel) / static_cast<double>(n);
      prod = prod.array() * (kernel.entries.transpose() * u).array();
    }
    const Vector direct = prod.array().pow(1.0 / static_cast<double>(n));
    const Vector via_log = mean_log.array().exp();
    EXPECT_LT(((via_log - direct).array() / direct.array()).abs().maxCoeff(), 1e-10);
  }
}

TEST(OtCore, OscillationMatchesBruteForce) {
  for (double eps : {0.1, 0.7}) {
    const auto cost = CostMatrix::absolute_grid(12);
    const auto k = build_gibbs_kernel(cost, eps);
    EXPECT_NEAR(osc_log_kernel(k), oracle::osc_log_kernel(cost.entries(), eps), 1e-9);
  }
}

TEST(OtCore, HilbertDistance) {
  Vector x(3), y(3);
  x << 1, 2, 4;
  y << 2, 2, 2;
  EXPECT_NEAR(hilbert_distance(x, y), oracle::hilbert(x, y), 1e-14);
  EXPECT_NEAR(hilbert_distance(x, 3.0 * x), 0.0, 1e-14);
  y(0) = 0.0;
  EXPECT_THROW(hilbert_distance(x, y), InvalidArgument);
}

TEST(OtCore, HilbertContraction) {
  std::mt19937_64 gen(5);
  for (double eps : {0.1, 0.5, 1.0}) {
    const auto inst = mixture_instance(16, 4, eps);
    const double r = std::tanh(1.0 / (2.0 * eps));
    for (int t = 0; t < 40; ++t) {
      const auto b = oracle::random_simplex(gen, 16), b2 = oracle::random_simplex(gen, 16);
      const auto fb = barycenter_map(inst.histograms(), inst.kernel(), inst.ridge(), b);
      const auto fb2 = barycenter_map(inst.histograms(), inst.kernel(), inst.ridge(), b2);
      EXPECT_LE(oracle::hilbert(fb, fb2), r * r * oracle::hilbert(b, b2) + 1e-9);
    }
  }
}

TEST(OtCore, FixedPoint) {
  const auto inst = mixture_instance(32, 6, 0.1);
  const auto r = centralized_barycenter(inst, 1e-11, 20000);
  ASSERT_TRUE(r.converged);
  const Vector next = balance_log_scale(
      r.log_v, centralized_log_step(inst.histograms(), inst.kernel(), inst.ridge(), r.log_v));
  EXPECT_LT((next - r.log_v).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(OtCore, PermutationEquivariance) {
  const std::size_t d = 20;
  const auto base = mixture_instance(d, 3, 0.2);
  std::vector<Eigen::Index> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(9));

  Matrix c(d, d);
  const auto& c0 = base.cost().entries();
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < d; ++k) c(j, k) = c0(perm[j], perm[k]);
  std::vector<Histogram> hs;
  for (const auto& h : base.histograms()) {
    Vector w(d);
    for (std::size_t j = 0; j < d; ++j) w(j) = h.weights()(perm[j]);
    hs.push_back(Histogram::from_unnormalized(w));
  }
  ProblemInstance permuted(CostMatrix(c), 0.2, 1e-16, hs);
  const auto a = centralized_barycenter(base, 1e-12, 20000).barycenter;
  const auto b = centralized_barycenter(permuted, 1e-12, 20000).barycenter;
  for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(b[j], a[static_cast<std::size_t>(perm[j])], 1e-10);
}

TEST(OtCore, IterationCapIsNotAnError) {
  const auto inst = mixture_instance(32, 4, 0.05);
  const auto r = centralized_barycenter(inst, 1e-14, 3);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3);
  EXPECT_EQ(r.change_trace.size(), 3u);
}
