#include "gsink/theory.hpp"

#include <cmath>
#include <limits>

namespace gsink {

namespace {
constexpr double kSlowContractionGap = 1e-6;
}

double bias_bound_for(const TheoryConstants& c, double perturbation) {
  const double bound = c.l_exp * c.l_norm_bound / (1.0 - c.rho) * perturbation;
  return std::isfinite(bound) ? bound : std::numeric_limits<double>::infinity();
}

TheoryConstants theory_constants(const ProblemInstance& instance, const CommsConfig& comms) {
  comms.validate();
  TheoryConstants c;
  c.osc_log_k = osc_log_kernel(instance.kernel());
  c.theta = std::tanh(0.25 * c.osc_log_k);
  c.rho = c.theta * c.theta;
  const double half_range = instance.cost().max_entry() / (2.0 * instance.epsilon());
  c.rho_bound = std::tanh(half_range) * std::tanh(half_range);
  c.l_exp = std::exp(comms.s_max);
  c.v_min = std::exp(comms.s_min);
  c.v_max = c.l_exp;
  c.l_norm_bound = 2.0 / c.v_min;
  c.quantization_error = comms.quantization_error();
  c.perturbation = comms.tau_inner + comms.delta + c.quantization_error;
  c.steady_state_bias_bound = bias_bound_for(c, c.perturbation);
  c.bias_bound_overflow = !std::isfinite(c.steady_state_bias_bound);
  c.slow_contraction = c.rho_bound > 1.0 - kSlowContractionGap;
  return c;
}

}  // namespace gsink
