#pragma once

// Seeded two-component Gaussian mixtures on [0, 1], discretized onto a
// regular d-point grid. They serve as the per-agent input histograms.

#include <cstdint>
#include <vector>

#include "gsink/ot_core.hpp"

namespace gsink {

struct MixtureParams {
  double mean1 = 0.3;
  double mean2 = 0.7;
  double width1 = 0.08;
  double width2 = 0.08;
  /// Weight of the first component.
  double weight = 0.5;
};

/// Ranges the mixture parameters are drawn from.
struct MixturePrior {
  double mean_lo = 0.15, mean_hi = 0.85;
  double width_lo = 0.04, width_hi = 0.12;
  double weight_lo = 0.3, weight_hi = 0.7;
};

/// Parameters of agent `agent` for the (density_seed, run_seed) pair. The
/// draw does not depend on d, so all support sizes see the same densities.
MixtureParams draw_mixture(std::uint64_t density_seed, std::uint64_t run_seed, std::size_t agent,
                           const MixturePrior& prior = {});

/// x_j = j / (d - 1), j = 0..d-1 (d >= 2).
Vector support_grid(std::size_t d);

/// Mixture density evaluated on the grid and normalized to unit mass.
Histogram discretize(const MixtureParams& params, std::size_t d);

std::vector<Histogram> mixture_histograms(std::size_t num_agents, std::size_t d,
                                          std::uint64_t density_seed, std::uint64_t run_seed,
                                          const MixturePrior& prior = {});

/// Sums a fine histogram into `coarse_d` contiguous bins; fine point i lands in
/// bin floor(i coarse_d / fine_d).
Histogram aggregate_bins(const Histogram& fine, std::size_t coarse_d);

}  // namespace gsink
