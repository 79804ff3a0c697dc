#pragma once

// Parameter sweeps over (value x seed) jobs run on a small thread pool.
// Aggregated tables are sorted by the swept value, so output never depends on
// job completion order.

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "gsink/config.hpp"
#include "gsink/experiments.hpp"
#include "gsink/stats.hpp"

namespace gsink {

enum class SweepVariable { N, d, delta, bits, tau_inner, epsilon, drop_prob };

std::string_view to_string(SweepVariable variable);
/// Throws ConfigError("sweep.variable") for unknown names.
SweepVariable parse_sweep_variable(std::string_view name);

struct SweepSpec {
  SweepVariable variable = SweepVariable::N;
  std::vector<double> values;
  RunConfig base_config;
  std::vector<std::uint64_t> seeds;
  /// Output directory of the sweep tables.
  std::string outputs;

  /// Reads the sweep section of a config. Throws ConfigError when it is missing.
  static SweepSpec from_config(const RunConfig& config);
  void validate() const;
};

/// The base config with one swept field replaced. N values on a grid topology
/// become square grids; bits values <= 0 select the unquantized channel.
RunConfig apply_sweep_value(const RunConfig& base, SweepVariable variable, double value);

struct SweepJob {
  std::size_t point = 0;
  double value = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error_message;
  RunMetrics metrics;
  /// l1_error_max against the sweep's reference: the same-size oracle, or for
  /// d sweeps the oracle at the largest d aggregated onto this support.
  double error = 0.0;
};

struct SweepPoint {
  double value = 0.0;
  MeanCi messages;
  MeanCi runtime;
  MeanCi error;
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::size_t converged = 0;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepJob> jobs;
  std::vector<SweepPoint> points;

  bool any_failed() const;
};

/// Calls fn(0..count-1) on up to `jobs` threads. Exceptions escaping fn are
/// rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

SweepResult run_sweep(const SweepSpec& spec, int jobs = 1);

}  // namespace gsink
