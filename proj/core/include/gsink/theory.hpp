#pragma once

#include "gsink/ot_core.hpp"
#include "gsink/protocol.hpp"

namespace gsink {

/// Contraction and perturbation constants of a problem/channel pair.
struct TheoryConstants {
  /// max_l (max_j log K_lj - min_j log K_lj).
  double osc_log_k = 0.0;
  /// tanh(osc_log_k / 4).
  double theta = 0.0;
  /// theta^2: contraction factor of one full scaling cycle in the Hilbert metric.
  double rho = 0.0;
  /// tanh^2(max C / (2 eps)); always >= rho.
  double rho_bound = 0.0;
  /// Lipschitz constant of exp on the clip range, e^{s_max}.
  double l_exp = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;
  /// Bound 2 / v_min on the l1 Lipschitz constant of x -> x / <1, x>.
  double l_norm_bound = 0.0;
  /// Per-entry quantization error of the channel.
  double quantization_error = 0.0;
  /// tau_inner + delta + quantization_error.
  double perturbation = 0.0;
  /// l_exp l_norm_bound / (1 - rho) * perturbation. +inf when it overflows.
  double steady_state_bias_bound = 0.0;
  bool bias_bound_overflow = false;
  /// rho_bound within 1e-6 of 1: the guaranteed rate is too slow to be useful.
  bool slow_contraction = false;
};

TheoryConstants theory_constants(const ProblemInstance& instance, const CommsConfig& comms);

/// Bias bound for an arbitrary perturbation level, reusing the other constants.
double bias_bound_for(const TheoryConstants& constants, double perturbation);

}  // namespace gsink
