#include "gsink/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace gsink {

using nlohmann::json;

std::string_view to_string(CostKind kind) {
  switch (kind) {
    case CostKind::squared_grid: return "squared_grid";
    case CostKind::abs_grid: return "abs_grid";
    case CostKind::file: return "file";
  }
  return "unknown";
}

namespace {

const char* const kSweepVariables[] = {"N", "d", "delta", "bits", "tau_inner", "epsilon", "drop_prob"};

json to_json(const RunConfig& c) {
  json j;
  const auto& m = c.problem.mixture;
  j["problem"] = {
      {"d", c.problem.d},
      {"epsilon", c.problem.epsilon},
      {"ridge", c.problem.ridge},
      {"cost_kind", std::string(to_string(c.problem.cost_kind))},
      {"cost_file", c.problem.cost_file},
      {"density_seed", c.problem.density_seed},
      {"mixture",
       {{"mean_lo", m.mean_lo}, {"mean_hi", m.mean_hi}, {"width_lo", m.width_lo},
        {"width_hi", m.width_hi}, {"weight_lo", m.weight_lo}, {"weight_hi", m.weight_hi}}},
  };
  j["network"] = {
      {"topology_kind", std::string(to_string(c.network.topology_kind))},
      {"N", c.network.num_nodes},
      {"params",
       {{"rows", c.network.rows}, {"cols", c.network.cols}, {"radius", c.network.radius},
        {"seed", c.network.topology_seed}}},
  };
  j["comms"] = {
      {"delta", c.comms.delta},
      {"tau_inner", c.comms.tau_inner},
      {"tau_outer", c.comms.tau_outer},
      {"s_min", c.comms.s_min},
      {"s_max", c.comms.s_max},
      {"inner_step_cap", c.comms.inner_step_cap},
      {"outer_iter_cap", c.comms.outer_iter_cap},
  };
  j["comms"]["bits"] = c.comms.bits ? json(*c.comms.bits) : json("unquantized");
  j["comms"]["outer_margin"] = c.comms.outer_margin ? json(*c.comms.outer_margin) : json("auto");
  j["channel"] = {{"drop_prob", c.channel.drop_prob}, {"max_staleness", c.channel.max_staleness}};
  j["activation"] = {{"mode", std::string(to_string(c.activation.mode))},
                     {"p_active", c.activation.p_active}};
  j["experiments"] = {
      {"bandwidth_ratio_max", c.experiments.bandwidth_ratio_max},
      {"async_error_factor", c.experiments.async_error_factor},
      {"verify_pairs", c.experiments.verify_pairs},
      {"verify_consensus_steps", c.experiments.verify_consensus_steps},
  };
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  if (c.sweep) j["sweep"] = {{"variable", c.sweep->variable}, {"values", c.sweep->values}};
  return j;
}

std::string join_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Copies `src` over `dst`, rejecting keys the schema (dst) does not know.
void overlay(json& dst, const json& src, const std::string& path) {
  if (!src.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : src.items()) {
    const std::string p = join_path(path, key);
    if (path.empty() && key == "sweep") {
      dst[key] = value;
      continue;
    }
    if (!dst.contains(key)) throw ConfigError(p, "unknown field");
    if (dst[key].is_object()) {
      overlay(dst[key], value, p);
    } else {
      dst[key] = value;
    }
  }
}

void apply_override(json& doc, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(text, "override must have the form dotted.path=value");
  }
  const std::string path = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::stringstream keys(path);
  std::string key;
  std::string walked;
  std::vector<std::string> parts;
  while (std::getline(keys, key, '.')) parts.push_back(key);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    walked = join_path(walked, parts[i]);
    const bool last = i + 1 == parts.size();
    const bool in_sweep = parts.front() == "sweep";
    if (!node->is_object()) throw ConfigError(walked, "is not a section");
    if (!node->contains(parts[i])) {
      if (!in_sweep) throw ConfigError(walked, "unknown field");
      (*node)[parts[i]] = last ? json() : json::object();
    }
    node = &(*node)[parts[i]];
  }
  if (node->is_object() && !value.is_object()) throw ConfigError(path, "cannot replace a section with a value");
  *node = std::move(value);
}

const json& field(const json& section, const std::string& path, const char* key) {
  if (!section.contains(key)) throw ConfigError(join_path(path, key), "missing field");
  return section.at(key);
}

double get_double(const json& s, const std::string& path, const char* key) {
  const json& v = field(s, path, key);
  if (!v.is_number()) throw ConfigError(join_path(path, key), "expected a number");
  return v.get<double>();
}

std::int64_t get_int(const json& s, const std::string& path, const char* key) {
  const json& v = field(s, path, key);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::floor(x) == x && std::abs(x) < 9e15) return static_cast<std::int64_t>(x);
  }
  throw ConfigError(join_path(path, key), "expected an integer");
}

std::size_t get_size(const json& s, const std::string& path, const char* key) {
  const auto v = get_int(s, path, key);
  if (v < 0) throw ConfigError(join_path(path, key), "must be >= 0");
  return static_cast<std::size_t>(v);
}

std::uint64_t get_seed(const json& v, const std::string& path) {
  if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    return v.get<std::uint64_t>();
  }
  throw ConfigError(path, "expected a nonnegative integer seed");
}

std::string get_string(const json& s, const std::string& path, const char* key) {
  const json& v = field(s, path, key);
  if (!v.is_string()) throw ConfigError(join_path(path, key), "expected a string");
  return v.get<std::string>();
}

RunConfig from_json(const json& j) {
  RunConfig c;
  {
    const json& p = j.at("problem");
    const std::string path = "problem";
    c.problem.d = get_size(p, path, "d");
    c.problem.epsilon = get_double(p, path, "epsilon");
    c.problem.ridge = get_double(p, path, "ridge");
    const auto kind = get_string(p, path, "cost_kind");
    if (kind == "squared_grid") {
      c.problem.cost_kind = CostKind::squared_grid;
    } else if (kind == "abs_grid") {
      c.problem.cost_kind = CostKind::abs_grid;
    } else if (kind == "file") {
      c.problem.cost_kind = CostKind::file;
    } else {
      throw ConfigError("problem.cost_kind", "expected squared_grid, abs_grid or file");
    }
    c.problem.cost_file = get_string(p, path, "cost_file");
    c.problem.density_seed = get_seed(field(p, path, "density_seed"), "problem.density_seed");
    const json& m = field(p, path, "mixture");
    const std::string mp = "problem.mixture";
    c.problem.mixture.mean_lo = get_double(m, mp, "mean_lo");
    c.problem.mixture.mean_hi = get_double(m, mp, "mean_hi");
    c.problem.mixture.width_lo = get_double(m, mp, "width_lo");
    c.problem.mixture.width_hi = get_double(m, mp, "width_hi");
    c.problem.mixture.weight_lo = get_double(m, mp, "weight_lo");
    c.problem.mixture.weight_hi = get_double(m, mp, "weight_hi");
  }
  {
    const json& n = j.at("network");
    try {
      c.network.topology_kind = parse_topology_kind(get_string(n, "network", "topology_kind"));
    } catch (const InvalidArgument& e) {
      throw ConfigError("network.topology_kind", e.what());
    }
    c.network.num_nodes = get_size(n, "network", "N");
    const json& pr = field(n, "network", "params");
    c.network.rows = get_size(pr, "network.params", "rows");
    c.network.cols = get_size(pr, "network.params", "cols");
    c.network.radius = get_double(pr, "network.params", "radius");
    c.network.topology_seed = get_seed(field(pr, "network.params", "seed"), "network.params.seed");
  }
  {
    const json& cm = j.at("comms");
    const std::string path = "comms";
    c.comms.delta = get_double(cm, path, "delta");
    c.comms.tau_inner = get_double(cm, path, "tau_inner");
    c.comms.tau_outer = get_double(cm, path, "tau_outer");
    c.comms.s_min = get_double(cm, path, "s_min");
    c.comms.s_max = get_double(cm, path, "s_max");
    c.comms.inner_step_cap = static_cast<int>(get_int(cm, path, "inner_step_cap"));
    c.comms.outer_iter_cap = static_cast<int>(get_int(cm, path, "outer_iter_cap"));
    const json& bits = field(cm, path, "bits");
    if (bits.is_string()) {
      if (bits.get<std::string>() != "unquantized") {
        throw ConfigError("comms.bits", "expected an integer or \"unquantized\"");
      }
      c.comms.bits.reset();
    } else {
      c.comms.bits = static_cast<int>(get_int(cm, path, "bits"));
    }
    const json& margin = field(cm, path, "outer_margin");
    if (margin.is_string()) {
      if (margin.get<std::string>() != "auto") {
        throw ConfigError("comms.outer_margin", "expected a number or \"auto\"");
      }
      c.comms.outer_margin.reset();
    } else {
      c.comms.outer_margin = get_double(cm, path, "outer_margin");
    }
  }
  {
    const json& ch = j.at("channel");
    c.channel.drop_prob = get_double(ch, "channel", "drop_prob");
    c.channel.max_staleness = static_cast<int>(get_int(ch, "channel", "max_staleness"));
  }
  {
    const json& a = j.at("activation");
    try {
      c.activation.mode = parse_activation_mode(get_string(a, "activation", "mode"));
    } catch (const InvalidArgument& e) {
      throw ConfigError("activation.mode", e.what());
    }
    c.activation.p_active = get_double(a, "activation", "p_active");
  }
  {
    const json& e = j.at("experiments");
    c.experiments.bandwidth_ratio_max = get_double(e, "experiments", "bandwidth_ratio_max");
    c.experiments.async_error_factor = get_double(e, "experiments", "async_error_factor");
    c.experiments.verify_pairs = static_cast<int>(get_int(e, "experiments", "verify_pairs"));
    c.experiments.verify_consensus_steps =
        static_cast<int>(get_int(e, "experiments", "verify_consensus_steps"));
  }
  const json& seeds = j.at("seeds");
  if (!seeds.is_array()) throw ConfigError("seeds", "expected a list of integers");
  c.seeds.clear();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    c.seeds.push_back(get_seed(seeds[i], "seeds[" + std::to_string(i) + "]"));
  }
  c.output_dir = get_string(j, "", "output_dir");
  if (j.contains("sweep") && !j.at("sweep").is_null()) {
    const json& s = j.at("sweep");
    if (!s.is_object()) throw ConfigError("sweep", "expected an object");
    for (const auto& [key, value] : s.items()) {
      if (key != "variable" && key != "values") throw ConfigError("sweep." + key, "unknown field");
    }
    SweepConfig sw;
    sw.variable = get_string(s, "sweep", "variable");
    const json& vals = field(s, "sweep", "values");
    if (!vals.is_array()) throw ConfigError("sweep.values", "expected a list of numbers");
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (!vals[i].is_number()) throw ConfigError("sweep.values[" + std::to_string(i) + "]", "expected a number");
      sw.values.push_back(vals[i].get<double>());
    }
    c.sweep = std::move(sw);
  }
  return c;
}

}  // namespace

void RunConfig::validate() const {
  if (problem.d < 2) throw ConfigError("problem.d", "must be >= 2");
  if (!(problem.epsilon > 0.0) || !std::isfinite(problem.epsilon)) {
    throw ConfigError("problem.epsilon", "must be a finite number > 0");
  }
  if (!(problem.ridge >= 0.0) || !std::isfinite(problem.ridge)) {
    throw ConfigError("problem.ridge", "must be a finite number >= 0");
  }
  if (problem.cost_kind == CostKind::file && problem.cost_file.empty()) {
    throw ConfigError("problem.cost_file", "required when cost_kind is file");
  }
  const auto& m = problem.mixture;
  if (!(m.mean_lo <= m.mean_hi)) throw ConfigError("problem.mixture.mean_hi", "must be >= mean_lo");
  if (!(m.width_lo > 0.0 && m.width_lo <= m.width_hi)) {
    throw ConfigError("problem.mixture.width_lo", "need 0 < width_lo <= width_hi");
  }
  if (!(m.weight_lo >= 0.0 && m.weight_lo <= m.weight_hi && m.weight_hi <= 1.0)) {
    throw ConfigError("problem.mixture.weight_lo", "need 0 <= weight_lo <= weight_hi <= 1");
  }

  if (network.num_nodes == 0) throw ConfigError("network.N", "must be >= 1");
  if (network.topology_kind == TopologyKind::grid2d) {
    const auto spec = topology_spec();
    if (spec.rows * spec.cols != network.num_nodes) {
      throw ConfigError("network.params.rows", "grid rows * cols must equal N (set rows/cols or use a square N)");
    }
  }
  if (network.topology_kind == TopologyKind::ring && network.num_nodes < 3) {
    throw ConfigError("network.N", "a ring needs N >= 3");
  }
  if (network.topology_kind == TopologyKind::random_geometric && !(network.radius > 0.0)) {
    throw ConfigError("network.params.radius", "must be > 0");
  }

  comms.validate();
  channel.validate();
  activation.validate();

  if (!(experiments.bandwidth_ratio_max > 0.0)) {
    throw ConfigError("experiments.bandwidth_ratio_max", "must be > 0");
  }
  if (!(experiments.async_error_factor > 0.0)) {
    throw ConfigError("experiments.async_error_factor", "must be > 0");
  }
  if (experiments.verify_pairs < 1) throw ConfigError("experiments.verify_pairs", "must be >= 1");
  if (experiments.verify_consensus_steps < 1) {
    throw ConfigError("experiments.verify_consensus_steps", "must be >= 1");
  }
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");

  if (sweep) {
    bool known = false;
    for (const char* v : kSweepVariables) known = known || sweep->variable == v;
    if (!known) {
      throw ConfigError("sweep.variable", "expected one of N, d, delta, bits, tau_inner, epsilon, drop_prob");
    }
    if (sweep->values.empty()) throw ConfigError("sweep.values", "must not be empty");
    for (std::size_t i = 1; i < sweep->values.size(); ++i) {
      if (!(sweep->values[i - 1] < sweep->values[i])) {
        throw ConfigError("sweep.values", "must be sorted in strictly increasing order");
      }
    }
  }
}

TopologySpec RunConfig::topology_spec() const {
  TopologySpec spec;
  spec.kind = network.topology_kind;
  spec.num_nodes = network.num_nodes;
  spec.radius = network.radius;
  spec.seed = network.topology_seed;
  spec.rows = network.rows;
  spec.cols = network.cols;
  if (spec.kind == TopologyKind::grid2d && spec.rows == 0 && spec.cols == 0) {
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(network.num_nodes))));
    if (side * side == network.num_nodes) spec.rows = spec.cols = side;
  } else if (spec.kind == TopologyKind::grid2d && spec.rows == 0 && spec.cols > 0) {
    spec.rows = network.num_nodes / spec.cols;
  } else if (spec.kind == TopologyKind::grid2d && spec.cols == 0 && spec.rows > 0) {
    spec.cols = network.num_nodes / spec.rows;
  }
  return spec;
}

RunConfig parse_run_config(std::string_view json_text, std::span<const std::string> overrides) {
  json doc = to_json(RunConfig{});
  json file = json::parse(json_text.begin(), json_text.end(), nullptr, /*allow_exceptions=*/false);
  if (file.is_discarded()) throw ConfigError("<root>", "config is not valid JSON");
  overlay(doc, file, "");
  for (const auto& o : overrides) apply_override(doc, o);
  RunConfig config = from_json(doc);
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path, std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), overrides);
}

std::string to_json_text(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("problem.cost_file", "cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    for (char& ch : line) {
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    }
    std::istringstream ls(line);
    std::vector<double> row;
    double x;
    while (ls >> x) row.push_back(x);
    if (!ls.eof()) throw ConfigError("problem.cost_file", "non-numeric entry in " + path.string());
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n) {
      throw ConfigError("problem.cost_file", "cost matrix must be square");
    }
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return m;
}

CostMatrix build_cost(const ProblemConfig& problem) {
  switch (problem.cost_kind) {
    case CostKind::squared_grid: return CostMatrix::squared_grid(problem.d);
    case CostKind::abs_grid: return CostMatrix::absolute_grid(problem.d);
    case CostKind::file: {
      Matrix m = read_matrix_csv(problem.cost_file);
      if (static_cast<std::size_t>(m.rows()) != problem.d) {
        throw ConfigError("problem.cost_file", "matrix size does not match problem.d");
      }
      try {
        return CostMatrix(std::move(m));
      } catch (const InvalidArgument& e) {
        throw ConfigError("problem.cost_file", e.what());
      }
    }
  }
  throw ConfigError("problem.cost_kind", "unsupported");
}

ProblemInstance make_instance(const RunConfig& config, std::uint64_t run_seed) {
  auto histograms = mixture_histograms(config.network.num_nodes, config.problem.d,
                                       config.problem.density_seed, run_seed, config.problem.mixture);
  return ProblemInstance(build_cost(config.problem), config.problem.epsilon, config.problem.ridge,
                         std::move(histograms));
}

}  // namespace gsink
