#include "gsink/sweeps.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "gsink/densities.hpp"

namespace gsink {

std::string_view to_string(SweepVariable variable) {
  switch (variable) {
    case SweepVariable::N: return "N";
    case SweepVariable::d: return "d";
    case SweepVariable::delta: return "delta";
    case SweepVariable::bits: return "bits";
    case SweepVariable::tau_inner: return "tau_inner";
    case SweepVariable::epsilon: return "epsilon";
    case SweepVariable::drop_prob: return "drop_prob";
  }
  return "unknown";
}

SweepVariable parse_sweep_variable(std::string_view name) {
  for (auto v : {SweepVariable::N, SweepVariable::d, SweepVariable::delta, SweepVariable::bits,
                 SweepVariable::tau_inner, SweepVariable::epsilon, SweepVariable::drop_prob}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("sweep.variable", "unknown sweep variable '" + std::string(name) + "'");
}

SweepSpec SweepSpec::from_config(const RunConfig& config) {
  if (!config.sweep) throw ConfigError("sweep", "config has no sweep section");
  SweepSpec spec;
  spec.variable = parse_sweep_variable(config.sweep->variable);
  spec.values = config.sweep->values;
  spec.base_config = config;
  spec.base_config.sweep.reset();
  spec.seeds = config.seeds;
  spec.outputs = config.output_dir;
  spec.validate();
  return spec;
}

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep.values", "must not be empty");
  if (!std::is_sorted(values.begin(), values.end())) throw ConfigError("sweep.values", "must be sorted");
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  for (double v : values) apply_sweep_value(base_config, variable, v).validate();
}

namespace {

std::size_t as_count(double value, const char* field) {
  if (!(value >= 0.0) || std::floor(value) != value) {
    throw ConfigError(field, "sweep value must be a nonnegative integer");
  }
  return static_cast<std::size_t>(value);
}

}  // namespace

RunConfig apply_sweep_value(const RunConfig& base, SweepVariable variable, double value) {
  RunConfig c = base;
  c.sweep.reset();
  switch (variable) {
    case SweepVariable::N:
      c.network.num_nodes = as_count(value, "sweep.values");
      c.network.rows = c.network.cols = 0;
      break;
    case SweepVariable::d:
      c.problem.d = as_count(value, "sweep.values");
      break;
    case SweepVariable::delta:
      c.comms.delta = value;
      break;
    case SweepVariable::bits:
      if (value <= 0.0) {
        c.comms.bits.reset();
      } else {
        c.comms.bits = static_cast<int>(as_count(value, "sweep.values"));
      }
      break;
    case SweepVariable::tau_inner:
      c.comms.tau_inner = value;
      break;
    case SweepVariable::epsilon:
      c.problem.epsilon = value;
      break;
    case SweepVariable::drop_prob:
      c.channel.drop_prob = value;
      break;
  }
  return c;
}

bool SweepResult::any_failed() const {
  return std::any_of(jobs.begin(), jobs.end(), [](const SweepJob& j) { return !j.ok; });
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

SweepResult run_sweep(const SweepSpec& spec, int jobs) {
  spec.validate();
  SweepResult result;
  result.spec = spec;

  // d sweeps are judged against the oracle at the largest d, one per seed.
  std::map<std::uint64_t, Histogram> fine_reference;
  if (spec.variable == SweepVariable::d) {
    const RunConfig fine = apply_sweep_value(spec.base_config, SweepVariable::d, spec.values.back());
    std::vector<std::optional<Histogram>> refs(spec.seeds.size());
    parallel_for(spec.seeds.size(), jobs, [&](std::size_t k) {
      refs[k] = oracle_barycenter(make_instance(fine, spec.seeds[k])).barycenter;
    });
    for (std::size_t k = 0; k < spec.seeds.size(); ++k) fine_reference.emplace(spec.seeds[k], *refs[k]);
  }

  for (std::size_t p = 0; p < spec.values.size(); ++p) {
    for (auto seed : spec.seeds) {
      SweepJob job;
      job.point = p;
      job.value = spec.values[p];
      job.seed = seed;
      result.jobs.push_back(std::move(job));
    }
  }

  parallel_for(result.jobs.size(), jobs, [&](std::size_t j) {
    SweepJob& job = result.jobs[j];
    try {
      const RunConfig config = apply_sweep_value(spec.base_config, spec.variable, job.value);
      const auto run = run_from_config(config, job.seed);
      job.metrics = run.metrics;
      job.error = run.metrics.l1_error_max;
      if (spec.variable == SweepVariable::d) {
        const Histogram ref = aggregate_bins(fine_reference.at(job.seed), config.problem.d);
        job.error = 0.0;
        for (const auto& b : run.node_barycenters) job.error = std::max(job.error, l1_distance(b, ref));
      }
      job.ok = true;
    } catch (const std::exception& e) {
      job.ok = false;
      job.error_message = e.what();
    }
  });

  for (std::size_t p = 0; p < spec.values.size(); ++p) {
    SweepPoint point;
    point.value = spec.values[p];
    std::vector<double> messages, runtime, error;
    for (const auto& job : result.jobs) {
      if (job.point != p) continue;
      ++point.runs;
      if (!job.ok) {
        ++point.failures;
        continue;
      }
      if (job.metrics.converged) ++point.converged;
      messages.push_back(static_cast<double>(job.metrics.messages_total));
      runtime.push_back(job.metrics.wall_clock_seconds);
      error.push_back(job.error);
    }
    point.messages = mean_ci95(messages);
    point.runtime = mean_ci95(runtime);
    point.error = mean_ci95(error);
    result.points.push_back(point);
  }
  return result;
}

}  // namespace gsink
