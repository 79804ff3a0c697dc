#pragma once

#include <cstddef>
#include <span>

namespace gsink {

struct MeanCi {
  double mean = 0.0;
  /// Half-width of the two-sided 95% Student-t interval (0 for one sample).
  double half_width = 0.0;
  std::size_t count = 0;
};

MeanCi mean_ci95(std::span<const double> samples);

/// Two-sided Student-t quantile t_{1 - alpha/2, dof}.
double student_t_quantile(double alpha, double dof);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y ~ intercept + slope x. Needs >= 2 distinct x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Least squares of log y against log x; all values must be positive.
LinearFit loglog_fit(std::span<const double> x, std::span<const double> y);

}  // namespace gsink
