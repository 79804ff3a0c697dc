#include "gsink/ot_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gsink {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_positive_size(std::size_t d, const char* what) {
  if (d == 0) throw InvalidArgument(std::string(what) + ": support size must be positive");
}

}  // namespace

// ---------------------------------------------------------------------------
// Histogram

Histogram::Histogram(Vector weights) : weights_(std::move(weights)) {
  require_positive_size(size(), "Histogram");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < weights_.size(); ++j) {
    const double w = weights_(j);
    if (!std::isfinite(w) || w < 0.0) {
      std::ostringstream msg;
      msg << "Histogram: entry " << j << " is " << w << " (must be finite and >= 0)";
      throw InvalidArgument(msg.str());
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "Histogram: entries sum to " << sum << ", expected 1";
    throw InvalidArgument(msg.str());
  }
}

Histogram Histogram::from_unnormalized(const Vector& mass) {
  if (mass.size() == 0) throw InvalidArgument("Histogram: empty mass vector");
  if (!mass.allFinite() || (mass.array() < 0.0).any()) {
    throw InvalidArgument("Histogram: mass must be finite and nonnegative");
  }
  const double total = mass.sum();
  if (!(total > 0.0)) throw InvalidArgument("Histogram: mass vector has zero total");
  Vector w = mass / total;
  // Renormalize once more so the sum is 1 to within a few ulps.
  w /= w.sum();
  return Histogram(std::move(w));
}

Histogram Histogram::uniform(std::size_t d) {
  require_positive_size(d, "Histogram::uniform");
  return Histogram(Vector::Constant(static_cast<Eigen::Index>(d), 1.0 / static_cast<double>(d)));
}

double l1_distance(const Histogram& a, const Histogram& b) {
  if (a.size() != b.size()) throw InvalidArgument("l1_distance: size mismatch");
  return (a.weights() - b.weights()).lpNorm<1>();
}

// ---------------------------------------------------------------------------
// CostMatrix

CostMatrix::CostMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw InvalidArgument("CostMatrix: must be square and nonempty");
  }
  if (!entries_.allFinite()) throw InvalidArgument("CostMatrix: entries must be finite");
  if ((entries_.array() < 0.0).any()) throw InvalidArgument("CostMatrix: entries must be >= 0");
}

CostMatrix CostMatrix::squared_grid(std::size_t d) {
  require_positive_size(d, "CostMatrix::squared_grid");
  const auto n = static_cast<Eigen::Index>(d);
  const double scale = d > 1 ? 1.0 / static_cast<double>((d - 1) * (d - 1)) : 0.0;
  Matrix c(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto diff = static_cast<double>(j - k);
      c(j, k) = diff * diff * scale;
    }
  }
  return CostMatrix(std::move(c));
}

CostMatrix CostMatrix::absolute_grid(std::size_t d) {
  require_positive_size(d, "CostMatrix::absolute_grid");
  const auto n = static_cast<Eigen::Index>(d);
  const double scale = d > 1 ? 1.0 / static_cast<double>(d - 1) : 0.0;
  Matrix c(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      c(j, k) = std::abs(static_cast<double>(j - k)) * scale;
    }
  }
  return CostMatrix(std::move(c));
}

// ---------------------------------------------------------------------------
// Gibbs kernel

GibbsKernel build_gibbs_kernel(const CostMatrix& cost, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("build_gibbs_kernel: epsilon must be finite and > 0");
  }
  GibbsKernel kernel;
  kernel.epsilon = epsilon;
  kernel.log_entries = -cost.entries() / epsilon;
  // std::exp, not the vectorized exp: the latter clamps deep underflow to a denormal.
  kernel.entries = kernel.log_entries.unaryExpr([](double x) { return std::exp(x); });
  for (Eigen::Index l = 0; l < kernel.entries.rows(); ++l) {
    if (!(kernel.entries.row(l).maxCoeff() > 0.0)) {
      std::ostringstream msg;
      msg << "build_gibbs_kernel: row " << l << " of exp(-C/eps) underflows to zero; epsilon="
          << epsilon << " is too small for a cost scale of " << cost.max_entry();
      throw NumericalError(msg.str());
    }
  }
  return kernel;
}

// ---------------------------------------------------------------------------
// ProblemInstance

ProblemInstance::ProblemInstance(CostMatrix cost, double epsilon, double ridge,
                                 std::vector<Histogram> histograms)
    : cost_(std::move(cost)),
      epsilon_(epsilon),
      ridge_(ridge),
      histograms_(std::move(histograms)),
      kernel_(build_gibbs_kernel(cost_, epsilon_)) {
  if (!(ridge_ > 0.0) || !std::isfinite(ridge_)) {
    throw InvalidArgument("ProblemInstance: ridge must be finite and > 0");
  }
  if (histograms_.empty()) throw InvalidArgument("ProblemInstance: needs at least one histogram");
  for (std::size_t i = 0; i < histograms_.size(); ++i) {
    if (histograms_[i].size() != cost_.size()) {
      std::ostringstream msg;
      msg << "ProblemInstance: histogram " << i << " has length " << histograms_[i].size()
          << ", support size is " << cost_.size();
      throw InvalidArgument(msg.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Log-domain algebra

Vector log_kernel_apply(const GibbsKernel& kernel, const Vector& log_v) {
  const Eigen::Index d = kernel.log_entries.rows();
  if (log_v.size() != d) throw InvalidArgument("log_kernel_apply: size mismatch");
  Vector out(d);
  Vector terms(d);
  for (Eigen::Index l = 0; l < d; ++l) {
    double peak = kNegInf;
    for (Eigen::Index j = 0; j < d; ++j) {
      terms(j) = kernel.log_entries(l, j) + log_v(j);
      peak = std::max(peak, terms(j));
    }
    if (!std::isfinite(peak)) {
      throw NumericalError("log_kernel_apply: non-finite log(K v) entry");
    }
    double acc = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) acc += std::exp(terms(j) - peak);
    out(l) = peak + std::log(acc);
  }
  return out;
}

Vector scaling_from_log_v(const Histogram& mu, const GibbsKernel& kernel, double ridge,
                          const Vector& log_v) {
  if (!log_v.allFinite()) throw NumericalError("local scaling: log v has non-finite entries");
  const Vector log_kv = log_kernel_apply(kernel, log_v);
  Vector u(log_kv.size());
  for (Eigen::Index l = 0; l < log_kv.size(); ++l) {
    const double kv = std::exp(log_kv(l));
    if (!std::isfinite(kv)) {
      std::ostringstream msg;
      msg << "local scaling: K v overflows at coordinate " << l << " (log value " << log_kv(l)
          << "); tighten the clip range s_max";
      throw NumericalError(msg.str());
    }
    u(l) = mu[static_cast<std::size_t>(l)] / (kv + ridge);
  }
  return u;
}

Vector log_message(const Vector& u, const GibbsKernel& kernel) {
  const Eigen::Index d = kernel.log_entries.rows();
  if (u.size() != d) throw InvalidArgument("log_message: size mismatch");
  Vector log_u(d);
  for (Eigen::Index l = 0; l < d; ++l) {
    if (!std::isfinite(u(l)) || u(l) < 0.0) {
      throw InvalidArgument("log_message: u must be finite and nonnegative");
    }
    log_u(l) = u(l) > 0.0 ? std::log(u(l)) : kNegInf;
  }
  Vector s(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto col = kernel.log_entries.col(j);
    double peak = kNegInf;
    for (Eigen::Index l = 0; l < d; ++l) {
      if (log_u(l) != kNegInf) peak = std::max(peak, col(l) + log_u(l));
    }
    if (peak == kNegInf) {
      std::ostringstream msg;
      msg << "log_message: (K^T u)_" << j << " is zero; degenerate agent state";
      throw NumericalError(msg.str());
    }
    double acc = 0.0;
    for (Eigen::Index l = 0; l < d; ++l) {
      if (log_u(l) != kNegInf) acc += std::exp(col(l) + log_u(l) - peak);
    }
    s(j) = peak + std::log(acc);
  }
  return s;
}

Vector centralized_log_step(std::span<const Histogram> histograms, const GibbsKernel& kernel,
                            double ridge, const Vector& log_v) {
  if (histograms.empty()) throw InvalidArgument("centralized_log_step: no histograms");
  Vector mean = Vector::Zero(log_v.size());
  for (const auto& mu : histograms) {
    mean += log_message(scaling_from_log_v(mu, kernel, ridge, log_v), kernel);
  }
  return mean / static_cast<double>(histograms.size());
}

IbpStep centralized_ibp_step(std::span<const Histogram> histograms, const GibbsKernel& kernel,
                             double ridge, const Vector& v) {
  if (histograms.empty()) throw InvalidArgument("centralized_ibp_step: no histograms");
  if (!v.allFinite() || (v.array() <= 0.0).any()) {
    throw InvalidArgument("centralized_ibp_step: v must be finite and strictly positive");
  }
  const Vector log_v = v.array().log().matrix();
  IbpStep step;
  step.u.reserve(histograms.size());
  Vector mean = Vector::Zero(v.size());
  for (const auto& mu : histograms) {
    step.u.push_back(scaling_from_log_v(mu, kernel, ridge, log_v));
    mean += log_message(step.u.back(), kernel);
  }
  mean /= static_cast<double>(histograms.size());
  step.v_next = mean.array().exp().matrix();
  return step;
}

Vector balance_log_scale(const Vector& log_v_prev, const Vector& log_v_averaged) {
  return log_v_averaged.array() + 0.5 * (log_v_prev.mean() - log_v_averaged.mean());
}

Histogram softmax_normalize(const Vector& log_v) {
  if (log_v.size() == 0 || !log_v.allFinite()) {
    throw InvalidArgument("softmax_normalize: input must be nonempty and finite");
  }
  Vector w = (log_v.array() - log_v.maxCoeff()).exp().matrix();
  w /= w.sum();
  return Histogram(std::move(w));
}

CentralizedResult centralized_barycenter(const ProblemInstance& instance, double tol,
                                         int max_iter, const CentralizedObserver& observer) {
  if (!(tol > 0.0)) throw InvalidArgument("centralized_barycenter: tol must be > 0");
  if (max_iter < 1) throw InvalidArgument("centralized_barycenter: max_iter must be >= 1");

  const auto& hist = instance.histograms();
  Vector log_v = Vector::Zero(static_cast<Eigen::Index>(instance.support_size()));
  std::vector<double> changes;
  bool converged = false;
  int it = 0;
  while (it < max_iter) {
    const Vector averaged = centralized_log_step(hist, instance.kernel(), instance.ridge(), log_v);
    Vector next = balance_log_scale(log_v, averaged);
    const double change = (next - log_v).lpNorm<Eigen::Infinity>();
    log_v = std::move(next);
    ++it;
    changes.push_back(change);
    if (observer) observer(it, log_v);
    if (change < tol) {
      converged = true;
      break;
    }
  }
  return CentralizedResult{softmax_normalize(log_v), log_v, it, converged, std::move(changes)};
}

Vector barycenter_map(std::span<const Histogram> histograms, const GibbsKernel& kernel,
                      double ridge, const Vector& b) {
  if (!b.allFinite() || (b.array() <= 0.0).any()) {
    throw InvalidArgument("barycenter_map: input must be strictly positive");
  }
  const Vector log_b = b.array().log().matrix();
  return softmax_normalize(centralized_log_step(histograms, kernel, ridge, log_b)).weights();
}

// ---------------------------------------------------------------------------
// Hilbert metric and kernel oscillation

double hilbert_distance(const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() == 0) {
    throw InvalidArgument("hilbert_distance: vectors must be nonempty and the same size");
  }
  if ((x.array() <= 0.0).any() || (y.array() <= 0.0).any() || !x.allFinite() || !y.allFinite()) {
    throw InvalidArgument("hilbert_distance: entries must be finite and strictly positive");
  }
  const Eigen::ArrayXd log_ratio = x.array().log() - y.array().log();
  return log_ratio.maxCoeff() - log_ratio.minCoeff();
}

double osc_log_kernel(const GibbsKernel& kernel) {
  // For a fixed row l the best column pair is (argmax, argmin) of that row, so
  // the maximization over (j, j') collapses to a row range.
  double osc = 0.0;
  for (Eigen::Index l = 0; l < kernel.log_entries.rows(); ++l) {
    const auto row = kernel.log_entries.row(l);
    osc = std::max(osc, row.maxCoeff() - row.minCoeff());
  }
  return osc;
}

}  // namespace gsink
