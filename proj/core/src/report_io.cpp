#include "gsink/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "gsink/densities.hpp"

namespace gsink {

using nlohmann::json;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

template <typename T>
std::string str(T v) {
  if constexpr (std::is_floating_point_v<T>) {
    return format_double(static_cast<double>(v));
  } else {
    return std::to_string(v);
  }
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table, const RunConfig& config) {
  {
    auto out = open_out(path);
    for (std::size_t c = 0; c < table.header.size(); ++c) out << (c ? "," : "") << table.header[c];
    out << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
      out << "\n";
    }
  }
  json side;
  side["table"] = path.filename().string();
  side["columns"] = table.header;
  side["seeds"] = config.seeds;
  side["config"] = json::parse(to_json_text(config));
  auto sidecar = path;
  sidecar.replace_extension(".json");
  write_text(sidecar, side.dump(2) + "\n");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

CsvTable trace_table(std::span<const TraceRow> rows) {
  CsvTable t{{"variant", "round", "outer_iter", "inner_step", "residual"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.variant, str(r.index), str(r.outer_iter), str(r.inner_step), str(r.residual)});
  }
  return t;
}

CsvTable overlap_table(std::span<const OverlapRow> rows) {
  CsvTable t{{"support_x", "b_star", "b_tilde_min", "b_tilde_max"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({str(r.support_x), str(r.b_star), str(r.b_tilde_min), str(r.b_tilde_max)});
  }
  return t;
}

CsvTable scaling_table(const SweepResult& sweep) {
  CsvTable t{{"N", "messages_mean", "messages_ci", "runtime_mean", "runtime_ci", "runs", "failures", "converged"}, {}};
  for (const auto& p : sweep.points) {
    t.rows.push_back({str(p.value), str(p.messages.mean), str(p.messages.half_width), str(p.runtime.mean),
                      str(p.runtime.half_width), str(p.runs), str(p.failures), str(p.converged)});
  }
  return t;
}

CsvTable support_table(const SweepResult& sweep) {
  CsvTable t{{"d", "error_mean", "error_ci", "runs", "failures", "converged"}, {}};
  for (const auto& p : sweep.points) {
    t.rows.push_back({str(p.value), str(p.error.mean), str(p.error.half_width), str(p.runs), str(p.failures),
                      str(p.converged)});
  }
  return t;
}

CsvTable sweep_table(const SweepResult& sweep) {
  CsvTable t{{"value", "error_mean", "error_ci", "messages_mean", "messages_ci", "runs", "failures", "converged"}, {}};
  for (const auto& p : sweep.points) {
    t.rows.push_back({str(p.value), str(p.error.mean), str(p.error.half_width), str(p.messages.mean),
                      str(p.messages.half_width), str(p.runs), str(p.failures), str(p.converged)});
  }
  return t;
}

CsvTable sweep_jobs_table(const SweepResult& sweep) {
  CsvTable t{{"value", "seed", "ok", "converged", "error", "messages_total", "outer_iterations", "message"}, {}};
  for (const auto& j : sweep.jobs) {
    std::string msg = j.error_message;
    for (char& ch : msg) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    t.rows.push_back({str(j.value), str(j.seed), j.ok ? "1" : "0", j.metrics.converged ? "1" : "0", str(j.error),
                      str(j.metrics.messages_total), str(j.metrics.outer_iterations), msg});
  }
  return t;
}

CsvTable barycenter_table(const Histogram& b) {
  CsvTable t{{"support_x", "mass"}, {}};
  const Vector x = support_grid(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    t.rows.push_back({str(x(static_cast<Eigen::Index>(j))), str(b[j])});
  }
  return t;
}

CsvTable centralized_trace_table(std::span<const double> change_trace) {
  CsvTable t{{"iteration", "log_v_change_linf"}, {}};
  for (std::size_t k = 0; k < change_trace.size(); ++k) t.rows.push_back({str(k), str(change_trace[k])});
  return t;
}

std::string metrics_json(std::span<const std::pair<std::uint64_t, RunMetrics>> runs) {
  json out = json::array();
  for (const auto& [seed, m] : runs) {
    json j;
    j["seed"] = seed;
    j["converged"] = m.converged;
    j["outer_iterations"] = m.outer_iterations;
    j["rounds"] = m.rounds;
    j["l1_error_per_node"] = m.l1_error_per_node;
    j["l1_error_max"] = m.l1_error_max;
    j["l1_error_mean"] = m.l1_error_mean;
    j["messages_total"] = m.messages_total;
    j["messages_per_agent"] = m.messages_per_agent;
    j["broadcasts_per_agent"] = m.broadcasts_per_agent;
    j["variation_per_agent"] = m.variation_per_agent;
    j["bytes_total"] = m.bytes_total;
    j["wall_clock_seconds"] = m.wall_clock_seconds;
    j["bias_bound"] = m.bias_bound;
    j["clip_active"] = m.clip_active;
    json outer = json::array();
    for (const auto& r : m.per_outer_iter) {
      outer.push_back({{"outer_iter", r.outer_iter},
                       {"inner_steps_used", r.inner_steps_used},
                       {"log_v_change_linf", r.log_v_change_linf},
                       {"consensus_residual_trace", r.consensus_residual_trace}});
    }
    j["per_outer_iter"] = std::move(outer);
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

std::string verify_json(const VerifyReport& report) {
  json out;
  const auto& c = report.constants;
  out["all_passed"] = report.all_passed();
  out["constants"] = {{"osc_log_k", c.osc_log_k},
                      {"theta", c.theta},
                      {"rho", c.rho},
                      {"rho_bound", c.rho_bound},
                      {"l_exp", c.l_exp},
                      {"l_norm_bound", c.l_norm_bound},
                      {"quantization_error", c.quantization_error},
                      {"perturbation", c.perturbation},
                      {"bias_bound_overflow", c.bias_bound_overflow},
                      {"slow_contraction", c.slow_contraction}};
  // JSON has no infinity; an overflowed bound is reported as null with the flag above.
  out["constants"]["steady_state_bias_bound"] =
      std::isfinite(c.steady_state_bias_bound) ? json(c.steady_state_bias_bound) : json();
  json checks = json::array();
  for (const auto& chk : report.checks) {
    json j{{"name", chk.name}, {"status", std::string(to_string(chk.status))}, {"summary", chk.summary}};
    json values = json::object();
    for (const auto& [k, v] : chk.values) values[k] = std::isfinite(v) ? json(v) : json();
    j["values"] = std::move(values);
    if (!chk.witness_json.empty()) j["witness"] = json::parse(chk.witness_json);
    checks.push_back(std::move(j));
  }
  out["checks"] = std::move(checks);
  out["warnings"] = report.warnings;
  return out.dump(2) + "\n";
}

void write_config_resolved(const std::filesystem::path& dir, const RunConfig& config) {
  std::filesystem::create_directories(dir);
  write_text(dir / "config_resolved.json", to_json_text(config));
}

}  // namespace gsink
