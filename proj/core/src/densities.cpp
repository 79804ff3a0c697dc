#include "gsink/densities.hpp"

#include <cmath>

#include "gsink/rng.hpp"

namespace gsink {

MixtureParams draw_mixture(std::uint64_t density_seed, std::uint64_t run_seed, std::size_t agent,
                           const MixturePrior& prior) {
  StreamRng rng(splitmix64(density_seed) ^ run_seed, StreamTag::density, agent);
  MixtureParams p;
  p.mean1 = rng.uniform(prior.mean_lo, prior.mean_hi);
  p.mean2 = rng.uniform(prior.mean_lo, prior.mean_hi);
  p.width1 = rng.uniform(prior.width_lo, prior.width_hi);
  p.width2 = rng.uniform(prior.width_lo, prior.width_hi);
  p.weight = rng.uniform(prior.weight_lo, prior.weight_hi);
  return p;
}

Vector support_grid(std::size_t d) {
  if (d < 2) throw InvalidArgument("support_grid: d must be at least 2");
  return Vector::LinSpaced(static_cast<Eigen::Index>(d), 0.0, 1.0);
}

Histogram discretize(const MixtureParams& p, std::size_t d) {
  const Vector x = support_grid(d);
  const auto bump = [](const Vector& x, double m, double s) {
    return (-0.5 * ((x.array() - m) / s).square()).exp();
  };
  const Vector mass = p.weight * bump(x, p.mean1, p.width1) + (1.0 - p.weight) * bump(x, p.mean2, p.width2);
  return Histogram::from_unnormalized(mass);
}

std::vector<Histogram> mixture_histograms(std::size_t num_agents, std::size_t d,
                                          std::uint64_t density_seed, std::uint64_t run_seed,
                                          const MixturePrior& prior) {
  std::vector<Histogram> out;
  out.reserve(num_agents);
  for (std::size_t i = 0; i < num_agents; ++i) {
    out.push_back(discretize(draw_mixture(density_seed, run_seed, i, prior), d));
  }
  return out;
}

Histogram aggregate_bins(const Histogram& fine, std::size_t coarse_d) {
  const std::size_t fine_d = fine.size();
  if (coarse_d == 0 || coarse_d > fine_d) {
    throw InvalidArgument("aggregate_bins: need 0 < coarse_d <= fine_d");
  }
  Vector mass = Vector::Zero(static_cast<Eigen::Index>(coarse_d));
  for (std::size_t i = 0; i < fine_d; ++i) {
    mass(static_cast<Eigen::Index>(i * coarse_d / fine_d)) += fine[i];
  }
  return Histogram::from_unnormalized(mass);
}

}  // namespace gsink
