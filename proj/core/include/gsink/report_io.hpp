#pragma once

// CSV tables with a one-line header and a sidecar JSON (resolved config,
// seeds and column names), plus the JSON reports of run and verify.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gsink/config.hpp"
#include "gsink/experiments.hpp"
#include "gsink/sweeps.hpp"
#include "gsink/verify.hpp"

namespace gsink {

/// Shortest representation that round-trips the double.
std::string format_double(double value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Writes `path` and `path` with extension .json holding the config, the
/// seeds and the column names.
void write_csv(const std::filesystem::path& path, const CsvTable& table, const RunConfig& config);
CsvTable read_csv(const std::filesystem::path& path);

CsvTable trace_table(std::span<const TraceRow> rows);
CsvTable overlap_table(std::span<const OverlapRow> rows);
/// N, messages_mean, messages_ci, runtime_mean, runtime_ci, runs, failures, converged.
CsvTable scaling_table(const SweepResult& sweep);
/// d, error_mean, error_ci, runs, failures, converged.
CsvTable support_table(const SweepResult& sweep);
/// Generic sweep: value, error_mean, error_ci, messages_mean, messages_ci, runs, failures, converged.
CsvTable sweep_table(const SweepResult& sweep);
/// One row per (value, seed) job, including failures and their messages.
CsvTable sweep_jobs_table(const SweepResult& sweep);
CsvTable barycenter_table(const Histogram& b);
CsvTable centralized_trace_table(std::span<const double> change_trace);

std::string metrics_json(std::span<const std::pair<std::uint64_t, RunMetrics>> runs);
std::string verify_json(const VerifyReport& report);

void write_text(const std::filesystem::path& path, const std::string& text);
/// Writes config_resolved.json into `dir` (created if needed).
void write_config_resolved(const std::filesystem::path& dir, const RunConfig& config);

}  // namespace gsink
