#include "gsink/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <vector>

#include "gsink/types.hpp"

namespace gsink {

double student_t_quantile(double alpha, double dof) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(dof > 0.0)) {
    throw InvalidArgument("student_t_quantile: need 0 < alpha < 1 and dof > 0");
  }
  const boost::math::students_t dist(dof);
  return boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
}

MeanCi mean_ci95(std::span<const double> samples) {
  MeanCi out;
  out.count = samples.size();
  if (samples.empty()) return out;
  const double n = static_cast<double>(samples.size());
  out.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() < 2) return out;
  double ss = 0.0;
  for (double s : samples) ss += (s - out.mean) * (s - out.mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  out.half_width = student_t_quantile(0.05, n - 1.0) * sd / std::sqrt(n);
  return out;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("least_squares: need at least two (x, y) pairs of equal length");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("least_squares: x values are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

LinearFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw InvalidArgument("loglog_fit: values must be positive");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return least_squares(lx, ly);
}

}  // namespace gsink
