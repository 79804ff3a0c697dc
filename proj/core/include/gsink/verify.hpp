#pragma once

// Empirical checks of the contraction, bridge, consensus, tracking and
// trigger-budget guarantees on a desk-scale configuration.

#include <string>
#include <utility>
#include <vector>

#include "gsink/config.hpp"
#include "gsink/theory.hpp"

namespace gsink {

enum class CheckStatus { passed, failed, excluded };

std::string_view to_string(CheckStatus status);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::passed;
  std::string summary;
  /// Named scalar measurements.
  std::vector<std::pair<std::string, double>> values;
  /// JSON text with the inputs that witness a failure (empty when none).
  std::string witness_json;
};

struct VerifyReport {
  TheoryConstants constants;
  std::vector<CheckResult> checks;
  std::vector<std::string> warnings;

  /// True when no check failed (excluded checks do not count as failures).
  bool all_passed() const;
  std::vector<std::string> failed_checks() const;
  const CheckResult* find(std::string_view name) const;
};

struct VerifyOptions {
  int jobs = 1;
  /// Seed of the random test vectors.
  std::uint64_t sample_seed = 0;
  /// Settings of the tracking grid (tau_inner is taken from the config).
  std::vector<double> deltas{1e-4, 1e-3, 1e-2};
  std::vector<int> bits{8, 12, 16};
};

/// Runs the suite on the configured problem, topology and seeds:
///   hilbert_contraction, bridge, consensus_decay, tracking, trigger_budget,
///   near_exact and delta_doubling.
VerifyReport verify_theory(const RunConfig& config, const VerifyOptions& options = {});

}  // namespace gsink
