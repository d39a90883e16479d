#include "wavesmooth/run.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "../core/yaml_section.hpp"
#include "wavesmooth/checkpoint.hpp"
#include "wavesmooth/error.hpp"

namespace wavesmooth::sim {

using detail::Section;

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Idm:
      return "idm";
    case ControllerKind::Reference:
      return "reference";
    case ControllerKind::Policy:
      return "policy";
  }
  return "?";
}

ControllerKind parse_controller_kind(const std::string& name) {
  if (name == "idm") return ControllerKind::Idm;
  if (name == "reference") return ControllerKind::Reference;
  if (name == "policy") return ControllerKind::Policy;
  throw ConfigError("controller", "unknown controller '" + name + "' (idm, reference, policy)");
}

namespace {

void read_reference(Section& parent, ReferenceParams& r) {
  Section s(parent.child("reference"), "reference");
  s.read("ema_time", r.ema_time);
  s.read("k_speed", r.k_speed);
  s.read("k_gap", r.k_gap);
  s.read("gap_fraction", r.gap_fraction);
  s.reject_unknown();
  if (!(r.ema_time > 0)) throw ConfigError("reference.ema_time", "must be > 0");
  if (!(r.gap_fraction > 0 && r.gap_fraction <= 1)) {
    throw ConfigError("reference.gap_fraction", "must be in (0, 1]");
  }
}

ControllerKind read_controller(Section& s) {
  std::string name = "reference";
  s.read("controller", name);
  return parse_controller_kind(name);
}

YAML::Node parse_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("", std::string("YAML syntax error: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::unique_ptr<AvController> make_controller(ControllerKind kind, const ReferenceParams& ref,
                                              const std::shared_ptr<const control::PolicyParameters>& policy) {
  switch (kind) {
    case ControllerKind::Idm:
      return std::make_unique<IdmController>();
    case ControllerKind::Reference:
      return std::make_unique<ReferenceController>(ref);
    case ControllerKind::Policy:
      return std::make_unique<PolicyController>(policy);
  }
  return nullptr;
}

double pct_change(double value, double base) {
  return base > 0.0 ? 100.0 * (value / base - 1.0) : 0.0;
}

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return;
  for (double x : xs) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / static_cast<double>(xs.size() - 1));
}

}  // namespace

RunSpec parse_run_spec(const std::string& yaml_text) {
  const YAML::Node root = parse_yaml(yaml_text);
  Section s(root, "");
  RunSpec spec;
  s.read("trajectory", spec.trajectory);
  s.read("platoon_size", spec.platoon_size);
  s.read("penetration", spec.penetration);
  s.read("lc_enabled", spec.lc_enabled);
  s.read("planner_enabled", spec.planner_enabled);
  s.read("warmup", spec.warmup);
  spec.controller = read_controller(s);
  s.read("checkpoint", spec.checkpoint);
  s.read("seed", spec.seed);
  s.read("throughput_positions", spec.throughput_positions);
  read_reference(s, spec.reference);
  s.reject_unknown();
  if (spec.trajectory.empty()) throw ConfigError("trajectory", "is required");
  if (spec.platoon_size < 1) throw ConfigError("platoon_size", "must be >= 1");
  if (!(spec.penetration >= 0 && spec.penetration <= 1)) {
    throw ConfigError("penetration", "must be in [0, 1]");
  }
  if (spec.controller == ControllerKind::Policy && spec.checkpoint.empty()) {
    throw ConfigError("checkpoint", "is required for the policy controller");
  }
  return spec;
}

RunSpec load_run_spec(const std::string& path) {
  try {
    return parse_run_spec(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(e.field(), path + ": " + e.what());
  }
}

RunSpec baseline_of(const RunSpec& spec) {
  RunSpec b = spec;
  b.controller = ControllerKind::Idm;
  b.checkpoint.clear();
  return b;
}

RunResult run_episode(const RunSpec& spec, const SimConfig& config, const RunOptions& options) {
  auto loaded = data::load_trajectory(spec.trajectory);
  auto traj = std::make_shared<const data::LeaderTrajectory>(std::move(loaded.trajectory));

  std::shared_ptr<const control::PolicyParameters> policy = options.policy;
  if (spec.controller == ControllerKind::Policy && !policy) {
    policy = std::make_shared<const control::PolicyParameters>(control::load_checkpoint(spec.checkpoint));
  }

  SimSetup setup;
  setup.config = config;
  setup.trajectory = traj;
  setup.layout = spec.layout();
  setup.lc_enabled = spec.lc_enabled;
  setup.planner_enabled = spec.planner_enabled;
  setup.warmup = spec.warmup;
  setup.seed = spec.seed;
  setup.tsd_stride = options.tsd_stride;
  setup.record_gap_traces = options.gap_traces;
  setup.throughput_positions = spec.throughput_positions;
  if (setup.throughput_positions.empty()) {
    const auto positions = data::integrate_positions(*traj);
    setup.throughput_positions.push_back(0.5 * positions.back());
  }

  const auto kind = spec.controller;
  const auto ref = spec.reference;
  Simulation sim(std::move(setup), [kind, ref, policy](int) { return make_controller(kind, ref, policy); });
  sim.run();

  RunResult out;
  out.spec = spec;
  out.trajectory_id = traj->id;
  out.tsd = sim.tsd();
  out.metrics = sim.take_metrics();
  out.system_mpg = out.metrics.system_mpg().value_or(0.0);
  out.throughput_vph = out.metrics.throughput_vph(0);
  return out;
}

PairedResult run_paired(const RunSpec& spec, const SimConfig& config, const RunOptions& options) {
  PairedResult p;
  p.controlled = run_episode(spec, config, options);
  p.baseline = run_episode(baseline_of(spec), config, options);
  const energy::RunDescriptor desc{p.controlled.trajectory_id, std::to_string(spec.platoon_size) + "@" +
                                                                   std::to_string(spec.penetration),
                                   spec.seed, spec.lc_enabled};
  p.mpg_improvement_pct = energy::mpg_improvement({desc, p.controlled.system_mpg}, {desc, p.baseline.system_mpg});
  p.throughput_delta_pct = pct_change(p.controlled.throughput_vph, p.baseline.throughput_vph);
  return p;
}

EvalGrid parse_eval_grid(const std::string& yaml_text) {
  const YAML::Node root = parse_yaml(yaml_text);
  Section s(root, "");
  EvalGrid g;
  s.read("trajectories", g.trajectories);
  s.read("penetrations", g.penetrations);
  s.read("lc", g.lc);
  s.read("seeds", g.seeds);
  s.read("platoon_size", g.platoon_size);
  s.read("planner_enabled", g.planner_enabled);
  g.controller = read_controller(s);
  s.read("checkpoint", g.checkpoint);
  read_reference(s, g.reference);
  s.reject_unknown();
  if (g.trajectories.empty()) throw ConfigError("trajectories", "at least one is required");
  if (g.penetrations.empty()) throw ConfigError("penetrations", "at least one is required");
  if (g.lc.empty()) throw ConfigError("lc", "at least one value is required");
  if (g.seeds.empty()) throw ConfigError("seeds", "at least one is required");
  for (double p : g.penetrations) {
    if (!(p > 0 && p <= 1)) throw ConfigError("penetrations", "values must be in (0, 1]");
  }
  if (g.controller == ControllerKind::Policy && g.checkpoint.empty()) {
    throw ConfigError("checkpoint", "is required for the policy controller");
  }
  return g;
}

EvalGrid load_eval_grid(const std::string& path) {
  try {
    return parse_eval_grid(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(e.field(), path + ": " + e.what());
  }
}

EvalResult evaluate_matrix(const EvalGrid& grid, const SimConfig& config, int jobs) {
  std::vector<RunSpec> specs;
  for (const auto& traj : grid.trajectories) {
    for (double pen : grid.penetrations) {
      for (bool lc : grid.lc) {
        for (auto seed : grid.seeds) {
          RunSpec s;
          s.trajectory = traj;
          s.platoon_size = grid.platoon_size;
          s.penetration = pen;
          s.lc_enabled = lc;
          s.planner_enabled = grid.planner_enabled;
          s.controller = grid.controller;
          s.checkpoint = grid.checkpoint;
          s.seed = seed;
          s.reference = grid.reference;
          specs.push_back(s);
        }
      }
    }
  }
  RunOptions options;
  if (grid.controller == ControllerKind::Policy) {
    options.policy = std::make_shared<const control::PolicyParameters>(control::load_checkpoint(grid.checkpoint));
  }

  EvalResult result;
  result.runs.resize(specs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= specs.size()) return;
      try {
        result.runs[i] = run_paired(specs[i], config, options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = specs.size();
      }
    }
  };
  const int n_threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(1, specs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  const std::size_t per_cell = grid.seeds.size();
  for (std::size_t c = 0; c < specs.size(); c += per_cell) {
    CellSummary cell;
    cell.trajectory_id = result.runs[c].controlled.trajectory_id;
    cell.penetration = specs[c].penetration;
    cell.lc_enabled = specs[c].lc_enabled;
    cell.seeds = static_cast<int>(per_cell);
    std::vector<double> mpg;
    std::vector<double> thr;
    for (std::size_t k = c; k < c + per_cell; ++k) {
      mpg.push_back(result.runs[k].mpg_improvement_pct);
      thr.push_back(result.runs[k].throughput_delta_pct);
    }
    mean_std(mpg, cell.mpg_improvement_mean, cell.mpg_improvement_std);
    mean_std(thr, cell.throughput_delta_mean, cell.throughput_delta_std);
    result.cells.push_back(cell);
  }
  return result;
}

void write_metrics_header(std::ostream& out) {
  out << "run_id,traj_id,penetration,lc_enabled,system_mpg,mpg_improvement_pct,throughput_vph,"
         "collisions\n";
}

void write_metrics_row(std::ostream& out, const std::string& run_id, const RunResult& run,
                       double improvement_pct) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%.4g,%d,%.17g,%.17g,%.17g,%ld\n", run_id.c_str(),
                run.trajectory_id.c_str(), run.spec.penetration,
                run.spec.lc_enabled ? 1 : 0, run.system_mpg, improvement_pct, run.throughput_vph,
                run.metrics.collisions);
  out << buf;
}

void write_metrics_csv(const std::string& path, const std::vector<PairedResult>& runs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_metrics_header(out);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto id = std::to_string(i);
    write_metrics_row(out, id + "-baseline", runs[i].baseline, 0.0);
    write_metrics_row(out, id + "-controlled", runs[i].controlled, runs[i].mpg_improvement_pct);
  }
}

void write_summary_csv(const std::string& path, const std::vector<CellSummary>& cells) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "traj_id,penetration,lc_enabled,seeds,mpg_improvement_mean,mpg_improvement_std,"
         "throughput_delta_pct_mean,throughput_delta_pct_std\n";
  char buf[256];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%s,%.4g,%d,%d,%.6f,%.6f,%.6f,%.6f\n", c.trajectory_id.c_str(),
                  c.penetration, c.lc_enabled ? 1 : 0, c.seeds, c.mpg_improvement_mean,
                  c.mpg_improvement_std, c.throughput_delta_mean, c.throughput_delta_std);
    out << buf;
  }
}

void export_tsd(const std::vector<energy::TsdRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "vehicle_id,t,x,v\n";
  char buf[128];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g\n", r.vehicle_id, r.t, r.x, r.v);
    out << buf;
  }
  if (!out) throw DataError("failed writing " + path);
}

void export_gap_trace(const RunMetrics& metrics, int av_id, const std::string& path) {
  const auto it = metrics.gap_traces.find(av_id);
  if (it == metrics.gap_traces.end()) {
    throw DataError("no gap trace recorded for vehicle " + std::to_string(av_id));
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "t,h,h_min,h_max,branch\n";
  char buf[160];
  for (const auto& g : it->second) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%s\n", g.t, g.h, g.h_min, g.h_max,
                  std::string(control::to_string(g.branch)).c_str());
    out << buf;
  }
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace wavesmooth::sim
