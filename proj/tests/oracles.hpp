#pragma once

// Reference computations written without the library, for cross-checks.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Triple loop over rows and column pairs of log K = -C/eps.
inline double osc_log_kernel(const Mat& cost, double eps) {
  double best = 0.0;
  for (Eigen::Index l = 0; l < cost.rows(); ++l)
    for (Eigen::Index j = 0; j < cost.cols(); ++j)
      for (Eigen::Index k = 0; k < cost.cols(); ++k)
        best = std::max(best, (-cost(l, j) + cost(l, k)) / eps);
  return best;
}

inline double hilbert(const Vec& x, const Vec& y) {
  double hi = -INFINITY, lo = INFINITY;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double r = std::log(x(j) / y(j));
    hi = std::max(hi, r);
    lo = std::min(lo, r);
  }
  return hi - lo;
}

// Plain linear-domain barycenter iteration with v kept on the simplex.
// Product and N-th root instead of log averages.
inline Vec naive_ibp(const std::vector<Vec>& mus, const Mat& cost, double eps, int iters) {
  const Mat k = (-cost / eps).array().exp().matrix();
  const auto d = cost.rows();
  Vec v = Vec::Constant(d, 1.0 / static_cast<double>(d));
  const double inv_n = 1.0 / static_cast<double>(mus.size());
  for (int t = 0; t < iters; ++t) {
    Vec prod = Vec::Ones(d);
    for (const auto& mu : mus) {
      const Vec u = mu.array() / (k * v).array();
      prod = prod.array() * (k.transpose() * u).array().pow(inv_n);
    }
    v = prod / prod.sum();
  }
  return v;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix, sorted descending.
inline std::vector<double> jacobi_eigenvalues(Mat a) {
  const auto n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

// Second largest |eigenvalue| of a symmetric doubly stochastic matrix.
inline double sigma2_symmetric(const Mat& w) {
  const auto n = static_cast<double>(w.rows());
  const Mat centered = w - Mat::Constant(w.rows(), w.cols(), 1.0 / n);
  double best = 0.0;
  for (double e : jacobi_eigenvalues(centered)) best = std::max(best, std::abs(e));
  return best;
}

// Metropolis weights from an explicit adjacency list.
inline Mat metropolis(const std::vector<std::vector<int>>& adj) {
  const auto n = static_cast<Eigen::Index>(adj.size());
  Mat w = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k : adj[static_cast<std::size_t>(i)]) {
      const auto di = adj[static_cast<std::size_t>(i)].size(), dk = adj[static_cast<std::size_t>(k)].size();
      w(i, k) = 1.0 / (1.0 + static_cast<double>(std::max(di, dk)));
    }
    w(i, i) = 1.0 - w.row(i).sum();
  }
  return w;
}

inline double quantize(double x, double lo, double hi, int bits) {
  const double step = (hi - lo) / (std::pow(2.0, bits) - 1.0);
  const double c = std::clamp(x, lo, hi);
  return lo + std::round((c - lo) / step) * step;
}

inline Vec random_simplex(std::mt19937_64& gen, Eigen::Index d) {
  std::exponential_distribution<double> e(1.0);
  Vec x(d);
  for (Eigen::Index j = 0; j < d; ++j) x(j) = e(gen) + 1e-3;
  return x / x.sum();
}

inline Mat squared_grid_cost(Eigen::Index d) {
  Mat c(d, d);
  const double h = 1.0 / static_cast<double>(d - 1);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = 0; k < d; ++k) c(j, k) = (h * static_cast<double>(j - k)) * (h * static_cast<double>(j - k));
  return c;
}

}  // namespace oracle
