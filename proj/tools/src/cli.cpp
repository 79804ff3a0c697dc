#include "gsink_cli/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <gsink/config.hpp>
#include <gsink/experiments.hpp>
#include <gsink/report_io.hpp>
#include <gsink/sweeps.hpp>
#include <gsink/verify.hpp>

namespace gsink::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Run config (JSON)")->required();
  cmd->add_option("--override", o.overrides, "dotted.path=value overrides")->expected(1, -1);
  cmd->add_option("--out", o.out_dir, "Output directory (overrides output_dir)");
  cmd->add_option("--jobs", o.jobs, "Parallel jobs")->check(CLI::PositiveNumber);
}

RunConfig load(const CommonOptions& o) {
  RunConfig config = load_run_config(o.config_path, o.overrides);
  if (!o.out_dir.empty()) config.output_dir = o.out_dir;
  return config;
}

int cmd_centralized(const CommonOptions& o, double tol, int max_iter, std::ostream& out) {
  const RunConfig config = load(o);
  const fs::path dir = config.output_dir;
  write_config_resolved(dir, config);
  const auto instance = make_instance(config, config.seeds.front());
  const auto result = centralized_barycenter(instance, tol, max_iter);
  write_csv(dir / "barycenter.csv", barycenter_table(result.barycenter), config);
  write_csv(dir / "centralized_trace.csv", centralized_trace_table(result.change_trace), config);
  out << "centralized: iterations=" << result.iterations << " converged=" << (result.converged ? "yes" : "no")
      << " final_change="
      << (result.change_trace.empty() ? 0.0 : result.change_trace.back()) << "\n";
  return result.converged ? kOk : kIterationCap;
}

int cmd_run(const CommonOptions& o, const std::string& packet_trace, std::ostream& out) {
  const RunConfig config = load(o);
  const fs::path dir = config.output_dir;
  write_config_resolved(dir, config);

  std::vector<std::pair<std::uint64_t, RunMetrics>> metrics(config.seeds.size());
  std::vector<RunResult> results(config.seeds.size());
  std::ofstream trace_file;
  if (!packet_trace.empty()) {
    fs::path p = packet_trace;
    if (p.is_relative()) p = dir / p;
    trace_file.open(p, std::ios::binary);
    if (!trace_file) throw Error("cannot write " + p.string());
  }
  // The packet trace belongs to the first seed; that run stays on this thread.
  parallel_for(config.seeds.size(), o.jobs, [&](std::size_t k) {
    RunOptions options;
    if (k == 0 && trace_file.is_open()) options.packet_trace = &trace_file;
    results[k] = run_from_config(config, config.seeds[k], options);
    metrics[k] = {config.seeds[k], results[k].metrics};
  });
  write_text(dir / "metrics.json", metrics_json(metrics));

  const auto instance = make_instance(config, config.seeds.front());
  const Histogram reference = oracle_barycenter(instance).barycenter;
  write_csv(dir / "overlap.csv", overlap_table(overlap_rows(reference, results.front().node_barycenters)),
            config);
  const auto trace = run_convergence_trace(config, config.seeds.front());
  write_csv(dir / "trace.csv", trace_table(trace), config);

  bool all_converged = true;
  out << std::setprecision(6);
  for (const auto& [seed, m] : metrics) {
    all_converged = all_converged && m.converged;
    out << "seed " << seed << ": error_max=" << m.l1_error_max << " messages_total=" << m.messages_total
        << " bias_bound=" << m.bias_bound << " outer_iterations=" << m.outer_iterations
        << (m.converged ? "" : " (outer iteration cap reached)") << (m.clip_active ? " (clipping active)" : "")
        << "\n";
  }
  return all_converged ? kOk : kIterationCap;
}

int cmd_sweep(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const RunConfig config = load(o);
  const fs::path dir = config.output_dir;
  write_config_resolved(dir, config);
  const SweepSpec spec = SweepSpec::from_config(config);
  const SweepResult result = run_sweep(spec, o.jobs);

  std::string table_name;
  switch (spec.variable) {
    case SweepVariable::N:
      table_name = "scaling.csv";
      write_csv(dir / table_name, scaling_table(result), config);
      break;
    case SweepVariable::d:
      table_name = "support.csv";
      write_csv(dir / table_name, support_table(result), config);
      break;
    default:
      table_name = "sweep.csv";
      write_csv(dir / table_name, sweep_table(result), config);
      break;
  }
  write_csv(dir / "sweep_runs.csv", sweep_jobs_table(result), config);

  out << "sweep over " << to_string(spec.variable) << ": " << spec.values.size() << " value(s) x "
      << spec.seeds.size() << " seed(s) -> " << (dir / table_name).string() << "\n";
  for (const auto& p : result.points) {
    out << "  " << to_string(spec.variable) << "=" << p.value << " error=" << p.error.mean
        << " messages=" << p.messages.mean << " converged=" << p.converged << "/" << p.runs;
    if (p.failures) out << " failed=" << p.failures;
    out << "\n";
  }
  if (result.any_failed()) {
    for (const auto& j : result.jobs) {
      if (!j.ok) err << "run failed (" << to_string(spec.variable) << "=" << j.value << ", seed " << j.seed
                     << "): " << j.error_message << "\n";
    }
    return kSweepFailure;
  }
  return kOk;
}

int cmd_verify(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const RunConfig config = load(o);
  const fs::path dir = config.output_dir;
  write_config_resolved(dir, config);
  VerifyOptions options;
  options.jobs = o.jobs;
  const VerifyReport report = verify_theory(config, options);
  write_text(dir / "verify.json", verify_json(report));
  for (const auto& c : report.checks) {
    out << std::left << std::setw(20) << c.name << " " << to_string(c.status) << "  " << c.summary << "\n";
  }
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  if (!report.all_passed()) {
    err << "verification failed:";
    for (const auto& name : report.failed_checks()) err << " " << name;
    err << "\n";
    return kVerifyFailure;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decentralized event-triggered log-gossip Sinkhorn barycenters", "gsink"};
  app.require_subcommand(1);

  CommonOptions common;
  double tol = kOracleTolerance;
  int max_iter = kOracleIterationCap;
  std::string packet_trace;

  auto* centralized = app.add_subcommand("centralized", "Centralized reference barycenter");
  add_common(centralized, common);
  centralized->add_option("--tol", tol, "Stopping tolerance on the log v change");
  centralized->add_option("--max-iter", max_iter, "Iteration cap")->check(CLI::PositiveNumber);

  auto* run_cmd = app.add_subcommand("run", "Decentralized run for every configured seed");
  add_common(run_cmd, common);
  run_cmd->add_option("--packet-trace", packet_trace,
                      "Binary packet dump of the first seed (relative to the output directory)");

  auto* sweep = app.add_subcommand("sweep", "Parameter sweep described by the config's sweep section");
  add_common(sweep, common);
  auto* verify = app.add_subcommand("verify", "Empirical checks of the convergence theory");
  add_common(verify, common);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (*centralized) return cmd_centralized(common, tol, max_iter, out);
    if (*run_cmd) return cmd_run(common, packet_trace, out);
    if (*sweep) return cmd_sweep(common, out, err);
    if (*verify) return cmd_verify(common, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}

}  // namespace gsink::cli
