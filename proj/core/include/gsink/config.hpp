#pragma once

// Run configuration: a JSON key-tree with sections problem, network, comms,
// channel, activation, experiments and an optional sweep section, plus
// `dotted.path=value` overrides. Every violation is reported as a ConfigError
// naming the offending field path.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gsink/densities.hpp"
#include "gsink/netsim.hpp"
#include "gsink/ot_core.hpp"
#include "gsink/protocol.hpp"

namespace gsink {

enum class CostKind { squared_grid, abs_grid, file };

std::string_view to_string(CostKind kind);

struct ProblemConfig {
  std::size_t d = 64;
  double epsilon = 0.1;
  double ridge = 1e-16;
  CostKind cost_kind = CostKind::squared_grid;
  /// CSV with d rows of d entries; used when cost_kind == file.
  std::string cost_file;
  std::uint64_t density_seed = 1;
  MixturePrior mixture;
};

struct NetworkConfig {
  TopologyKind topology_kind = TopologyKind::grid2d;
  std::size_t num_nodes = 16;
  /// grid2d shape; 0 derives a square grid from num_nodes.
  std::size_t rows = 0;
  std::size_t cols = 0;
  /// random_geometric connection radius and placement seed.
  double radius = 0.5;
  std::uint64_t topology_seed = 0;
};

/// Thresholds used by the experiment harness and the acceptance checks.
struct ExperimentConfig {
  /// Triggered runs must send at most this fraction of the always-gossip messages.
  double bandwidth_ratio_max = 0.6;
  /// Allowed ratio of asynchronous to synchronous error.
  double async_error_factor = 3.0;
  /// Random pairs used by the contraction and bridge checks.
  int verify_pairs = 100;
  /// Gossip steps checked by the consensus-decay check.
  int verify_consensus_steps = 100;
};

struct SweepConfig {
  /// One of N, d, delta, bits, tau_inner, epsilon, drop_prob.
  std::string variable;
  std::vector<double> values;
};

struct RunConfig {
  ProblemConfig problem;
  NetworkConfig network;
  CommsConfig comms;
  ChannelModel channel;
  ActivationModel activation;
  ExperimentConfig experiments;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string output_dir = "out";
  std::optional<SweepConfig> sweep;

  /// Throws ConfigError with the field path of the first violation.
  void validate() const;

  TopologySpec topology_spec() const;
};

/// Parses JSON text, applies `path=value` overrides (values are read as JSON
/// when they parse, otherwise as strings) and validates the result.
RunConfig parse_run_config(std::string_view json_text, std::span<const std::string> overrides = {});
RunConfig load_run_config(const std::filesystem::path& path,
                          std::span<const std::string> overrides = {});

/// Fully resolved config (all defaults filled in) as pretty-printed JSON.
std::string to_json_text(const RunConfig& config);

/// Cost matrix of the configured kind at support size problem.d.
CostMatrix build_cost(const ProblemConfig& problem);

/// Problem instance of a run: mixture inputs drawn from (density_seed, run_seed).
ProblemInstance make_instance(const RunConfig& config, std::uint64_t run_seed);

/// Reads a dense square matrix from comma- or whitespace-separated text.
Matrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace gsink
