#pragma once

// Entropic optimal-transport primitives: Gibbs kernel, log-domain messages,
// the centralized iterative-Bregman-projection barycenter used as the
// reference oracle, and the Hilbert projective metric.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gsink/types.hpp"

namespace gsink {

/// Probability vector on a d-point support.
class Histogram {
 public:
  static constexpr double kSumTolerance = 1e-12;

  /// Throws InvalidArgument on negative or non-finite entries, or when the
  /// entries do not sum to 1 within kSumTolerance.
  explicit Histogram(Vector weights);

  /// Normalizes a nonnegative vector with positive mass.
  static Histogram from_unnormalized(const Vector& mass);
  static Histogram uniform(std::size_t d);

  const Vector& weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
  double operator[](std::size_t j) const { return weights_(static_cast<Eigen::Index>(j)); }

 private:
  Vector weights_;
};

double l1_distance(const Histogram& a, const Histogram& b);

/// Nonnegative ground cost on a common support.
class CostMatrix {
 public:
  explicit CostMatrix(Matrix entries);

  /// C_jk = (j-k)^2 / (d-1)^2: squared distance on a regular grid over [0,1].
  static CostMatrix squared_grid(std::size_t d);
  /// C_jk = |j-k| / (d-1).
  static CostMatrix absolute_grid(std::size_t d);

  const Matrix& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  /// max_jk C_jk (the entrywise sup-norm).
  double max_entry() const noexcept { return entries_.maxCoeff(); }

 private:
  Matrix entries_;
};

/// K = exp(-C/eps) together with its logarithm -C/eps.
struct GibbsKernel {
  Matrix entries;
  Matrix log_entries;
  double epsilon = 0.0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(entries.rows()); }
};

/// Throws InvalidArgument for eps <= 0 or non-finite cost, NumericalError when
/// some row of K underflows to zero everywhere (eps too small for the cost scale).
GibbsKernel build_gibbs_kernel(const CostMatrix& cost, double epsilon);

/// Shared problem data: support, cost, regularization, ridge and one histogram
/// per agent. The Gibbs kernel is built once at construction.
class ProblemInstance {
 public:
  ProblemInstance(CostMatrix cost, double epsilon, double ridge, std::vector<Histogram> histograms);

  std::size_t support_size() const noexcept { return cost_.size(); }
  std::size_t num_agents() const noexcept { return histograms_.size(); }
  const CostMatrix& cost() const noexcept { return cost_; }
  double epsilon() const noexcept { return epsilon_; }
  double ridge() const noexcept { return ridge_; }
  const std::vector<Histogram>& histograms() const noexcept { return histograms_; }
  const GibbsKernel& kernel() const noexcept { return kernel_; }

 private:
  CostMatrix cost_;
  double epsilon_;
  double ridge_;
  std::vector<Histogram> histograms_;
  GibbsKernel kernel_;
};

/// log(K v) computed as a log-sum-exp over log K + log v.
Vector log_kernel_apply(const GibbsKernel& kernel, const Vector& log_v);

/// u = mu / (K exp(log_v) + ridge). Throws NumericalError when K v overflows.
Vector scaling_from_log_v(const Histogram& mu, const GibbsKernel& kernel, double ridge,
                          const Vector& log_v);

/// s = log(K^T u), reduced with log-sum-exp; zero entries of u are skipped.
/// Throws NumericalError if some entry of K^T u is zero.
Vector log_message(const Vector& u, const GibbsKernel& kernel);

struct IbpStep {
  std::vector<Vector> u;
  Vector v_next;
};

/// One centralized scaling step: u_i = mu_i / (K v + ridge), then
/// v_next = exp(mean_i log(K^T u_i)). The geometric mean is never formed as a
/// product of N vectors.
IbpStep centralized_ibp_step(std::span<const Histogram> histograms, const GibbsKernel& kernel,
                             double ridge, const Vector& v);

/// Log-domain form of the v-update: mean_i log(K^T u_i) given log v.
Vector centralized_log_step(std::span<const Histogram> histograms, const GibbsKernel& kernel,
                            double ridge, const Vector& log_v);

/// Fixes the scale of a freshly averaged log v.
///
/// The shared-scaling recursion is homogeneous of degree -1 (v -> c v maps to
/// v_next / c), so log v would alternate between two offsets forever. Taking
/// half of the mean offset of the previous iterate pins the scale at the
/// unique balanced fixed point while leaving softmax(log v) untouched.
Vector balance_log_scale(const Vector& log_v_prev, const Vector& log_v_averaged);

/// softmax(log_v) with max subtraction.
Histogram softmax_normalize(const Vector& log_v);

struct CentralizedResult {
  Histogram barycenter;
  Vector log_v;
  int iterations = 0;
  bool converged = false;
  /// ||log v^(t+1) - log v^(t)||_inf per iteration.
  std::vector<double> change_trace;
};

/// Called after each iteration with (iteration index, new log v).
using CentralizedObserver = std::function<void(int, const Vector&)>;

/// Iterates the balanced scaling recursion from v = 1 until the sup-norm change
/// of log v drops below `tol` or `max_iter` steps ran. Hitting the cap is not an
/// error: the last iterate is returned with converged = false.
CentralizedResult centralized_barycenter(const ProblemInstance& instance, double tol,
                                         int max_iter,
                                         const CentralizedObserver& observer = {});

/// One full centralized cycle F applied to a positive vector b: the u-updates with
/// v = b, the shared v-update, then normalization to the simplex.
Vector barycenter_map(std::span<const Histogram> histograms, const GibbsKernel& kernel,
                      double ridge, const Vector& b);

/// Hilbert projective metric log(max x/y) - log(min x/y). Throws
/// InvalidArgument on nonpositive entries or size mismatch.
double hilbert_distance(const Vector& x, const Vector& y);

/// max over rows l and column pairs (j, j') of log K_lj - log K_lj'.
double osc_log_kernel(const GibbsKernel& kernel);

}  // namespace gsink
