#include "wavesmooth/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "wavesmooth/config.hpp"
#include "wavesmooth/error.hpp"
#include "wavesmooth/idm.hpp"
#include "wavesmooth/run.hpp"
#include "wavesmooth/trainer.hpp"
#include "wavesmooth/trajectory.hpp"

namespace wavesmooth::cli {

namespace {

constexpr const char* kConfigEnv = "WAVESIM_CONFIG";

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
  int jobs = 1;
};

void add_common(CLI::App* app, Common& c, bool with_jobs) {
  app->add_option("--config", c.config_path, "YAML config file")->envname(kConfigEnv);
  app->add_option("--set", c.overrides, "Override a config key, e.g. --set idm.T=1.2")
      ->type_name("KEY=VALUE");
  app->add_option("--out", c.out_dir, "Output directory")->capture_default_str();
  app->add_option("--seed", c.seed, "Random seed (overrides config and spec)");
  app->add_flag("-v,--verbose", c.verbosity, "More output (repeatable)");
  if (with_jobs) {
    app->add_option("--jobs", c.jobs, "Concurrent simulation instances")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }
}

SimConfig load(const Common& c) {
  SimConfig cfg = c.config_path.empty() ? parse_config("", c.overrides)
                                        : load_config(c.config_path, c.overrides);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

std::string out_file(const Common& c, const std::string& name) {
  std::filesystem::create_directories(c.out_dir);
  return (std::filesystem::path(c.out_dir) / name).string();
}

void print_header(const char* command, const SimConfig& cfg, std::uint64_t seed) {
  std::printf("%s seed=%llu config=%s\n", command, static_cast<unsigned long long>(seed),
              config_hash(cfg).c_str());
}

int cmd_simulate(const Common& c, const std::string& spec_path, int tsd_stride, bool gap_traces) {
  const SimConfig cfg = load(c);
  auto spec = sim::load_run_spec(spec_path);
  if (c.seed) spec.seed = *c.seed;
  print_header("simulate", cfg, spec.seed);
  sim::RunOptions opt;
  opt.tsd_stride = tsd_stride;
  opt.gap_traces = gap_traces;
  const auto p = sim::run_paired(spec, cfg, opt);
  sim::write_metrics_csv(out_file(c, "metrics.csv"), {p});
  if (tsd_stride > 0) sim::export_tsd(p.controlled.tsd, out_file(c, "tsd.csv"));
  if (gap_traces) {
    for (const auto& [id, trace] : p.controlled.metrics.gap_traces) {
      sim::export_gap_trace(p.controlled.metrics, id, out_file(c, "gap_trace_" + std::to_string(id) + ".csv"));
    }
  }
  std::printf(
      "traj=%s controller=%s penetration=%.4g lc=%d mpg=%.4f baseline_mpg=%.4f "
      "improvement=%+.2f%% throughput=%.1f vph (%+.2f%%) collisions=%ld\n",
      p.controlled.trajectory_id.c_str(), std::string(sim::to_string(spec.controller)).c_str(),
      spec.penetration, spec.lc_enabled ? 1 : 0, p.controlled.system_mpg, p.baseline.system_mpg,
      p.mpg_improvement_pct, p.controlled.throughput_vph, p.throughput_delta_pct,
      p.controlled.metrics.collisions);
  if (c.verbosity > 0) {
    const auto& b = p.controlled.metrics.branch_counts;
    std::printf("wrapper steps: failsafe=%ld gap_close=%ld pass=%ld; last follower speed std %.4f (baseline %.4f)\n",
                b[0], b[1], b[2], p.controlled.metrics.last_follower_speed_std(),
                p.baseline.metrics.last_follower_speed_std());
  }
  return kExitOk;
}

int cmd_evaluate(const Common& c, const std::string& grid_path) {
  const SimConfig cfg = load(c);
  auto grid = sim::load_eval_grid(grid_path);
  if (c.seed) grid.seeds = {*c.seed};
  print_header("evaluate", cfg, grid.seeds.front());
  const auto result = sim::evaluate_matrix(grid, cfg, c.jobs);
  sim::write_metrics_csv(out_file(c, "metrics.csv"), result.runs);
  sim::write_summary_csv(out_file(c, "summary.csv"), result.cells);
  std::printf("%-12s %-11s %-3s %-5s %-22s %-22s\n", "traj", "penetration", "lc", "seeds",
              "mpg_improvement", "throughput_delta");
  for (const auto& cell : result.cells) {
    std::printf("%-12s %-11.4g %-3d %-5d %+8.2f%% +- %-9.2f %+8.2f%% +- %.2f\n",
                cell.trajectory_id.c_str(), cell.penetration, cell.lc_enabled ? 1 : 0, cell.seeds,
                cell.mpg_improvement_mean, cell.mpg_improvement_std, cell.throughput_delta_mean,
                cell.throughput_delta_std);
  }
  return kExitOk;
}

int cmd_train(const Common& c, bool strict, bool no_planner, int iterations) {
  const SimConfig cfg = load(c);
  std::vector<std::shared_ptr<const data::LeaderTrajectory>> trajs;
  for (const auto& path : cfg.train.trajectories) {
    trajs.push_back(std::make_shared<const data::LeaderTrajectory>(data::load_trajectory(path).trajectory));
  }
  rl::TrainOptions opt;
  opt.config = cfg;
  opt.seed = cfg.seed;
  opt.out_dir = c.out_dir;
  opt.strict_deterministic = strict;
  opt.planner_obs = !no_planner;
  opt.jobs = c.jobs > 1 ? c.jobs : cfg.train.jobs;
  opt.iterations = iterations;
  if (c.verbosity > 0) {
    opt.on_iteration = [](const rl::IterationLog& row) {
      std::printf("%s\n", rl::format_log_row(row).c_str());
      std::fflush(stdout);
    };
  }
  print_header("train", cfg, cfg.seed);
  std::filesystem::create_directories(c.out_dir);
  {
    std::ofstream resolved(out_file(c, "config.yaml"));
    resolved << serialize_config(cfg);
  }
  const auto result = rl::train(opt, trajs);
  const auto& last = result.log.back();
  std::printf("iterations=%zu final_mean_ep_reward=%.6g transitions_per_iter=%d episodes_per_iter=%d policy=%s\n",
              result.log.size(), last.mean_ep_reward, last.transitions, last.episodes,
              out_file(c, "policy.bin").c_str());
  return kExitOk;
}

int cmd_stability(const Common& c, const std::vector<double>& speeds,
                  std::optional<double> solve_target) {
  SimConfig cfg = load(c);
  print_header("stability", cfg, cfg.seed);
  if (solve_target) {
    // The boundary speed grows as a_max shrinks; bisect a_max in [0.1, 5].
    double lo = 0.1;
    double hi = 5.0;
    auto boundary = [&](double a) {
      IdmParams p = cfg.idm;
      p.max_accel = a;
      return dynamics::stability_boundary(p, 0.5, p.v0 - 0.5);
    };
    for (int i = 0; i < 200 && hi - lo > 1e-10; ++i) {
      const double mid = 0.5 * (lo + hi);
      const double b = boundary(mid);
      if (std::isnan(b) || b < *solve_target) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    const double a = 0.5 * (lo + hi);
    std::printf("a_max=%.6f puts the stability boundary at %.4f m/s\n", a, boundary(a));
    return kExitOk;
  }
  const double b = dynamics::stability_boundary(cfg.idm, 0.5, cfg.idm.v0 - 0.5);
  if (std::isnan(b)) {
    std::printf("boundary=none (margin keeps its sign over [0.5, %.1f] m/s)\n", cfg.idm.v0 - 0.5);
  } else {
    std::printf("boundary=%.6f m/s\n", b);
  }
  std::ofstream csv(out_file(c, "stability.csv"));
  csv << "v,margin,f_s,f_v,f_rel,stable\n";
  for (double v : speeds) {
    const auto m = dynamics::string_stability(cfg.idm, v);
    std::printf("v=%6.2f margin=%+.6f %s\n", v, m.margin, m.stable() ? "stable" : "unstable");
    csv << v << ',' << m.margin << ',' << m.f_s << ',' << m.f_v << ',' << m.f_rel << ','
        << (m.stable() ? 1 : 0) << '\n';
  }
  return kExitOk;
}

int cmd_gen_data(const Common& c) {
  const auto written = data::generate_datasets(c.out_dir);
  for (const auto& p : written) std::printf("wrote %s\n", p.c_str());
  return kExitOk;
}

int cmd_export_tsd(const Common& c, const std::string& spec_path, int stride) {
  const SimConfig cfg = load(c);
  auto spec = sim::load_run_spec(spec_path);
  if (c.seed) spec.seed = *c.seed;
  print_header("export-tsd", cfg, spec.seed);
  sim::RunOptions opt;
  opt.tsd_stride = stride;
  opt.gap_traces = true;
  const auto run = sim::run_episode(spec, cfg, opt);
  sim::export_tsd(run.tsd, out_file(c, "tsd.csv"));
  for (const auto& [id, trace] : run.metrics.gap_traces) {
    sim::export_gap_trace(run.metrics, id, out_file(c, "gap_trace_" + std::to_string(id) + ".csv"));
  }
  std::printf("traj=%s records=%zu avs=%zu mpg=%.4f\n", run.trajectory_id.c_str(), run.tsd.size(),
              run.metrics.gap_traces.size(), run.system_mpg);
  return kExitOk;
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"wavesim: mixed-autonomy platoon simulation, evaluation and PPO training"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "wavesim 1.0");

  Common sim_c, eval_c, train_c, stab_c, gen_c, tsd_c;
  std::string spec_path, grid_path;
  int tsd_stride = 0;
  bool gap_traces = false;
  auto* simulate = app.add_subcommand("simulate", "Run a spec and its all-IDM baseline; write metrics.csv");
  add_common(simulate, sim_c, false);
  simulate->add_option("--spec", spec_path, "Run spec YAML")->required();
  simulate->add_option("--tsd-stride", tsd_stride, "Also write tsd.csv every N steps (0: off)")
      ->capture_default_str();
  simulate->add_flag("--gap-traces", gap_traces, "Also write gap_trace_<id>.csv per AV");

  auto* evaluate = app.add_subcommand("evaluate", "Run an evaluation grid; write metrics.csv and summary.csv");
  add_common(evaluate, eval_c, true);
  evaluate->add_option("--grid", grid_path, "Grid YAML")->required();

  bool strict = false;
  bool no_planner = false;
  int iterations = 0;
  auto* train = app.add_subcommand("train", "PPO training; writes train_log.csv and checkpoints");
  add_common(train, train_c, true);
  train->add_flag("--strict-deterministic", strict, "Single-threaded collection, wall_s logged as 0");
  train->add_flag("--no-planner", no_planner, "Replace the planner speeds by the ego speed");
  train->add_option("--iterations", iterations, "Override train.iterations");

  std::vector<double> speeds{10, 14, 18, 22, 25};
  std::optional<double> solve;
  auto* stability = app.add_subcommand("stability", "String-stability margins of the configured IDM");
  add_common(stability, stab_c, false);
  stability->add_option("--speeds", speeds, "Speeds to report")->capture_default_str();
  stability->add_option("--solve-accel", solve, "Find a_max putting the boundary at this speed");

  auto* gen = app.add_subcommand("gen-data", "Regenerate the synthetic train/eval trajectories");
  add_common(gen, gen_c, false);
  gen->get_option("--out")->default_val("data");

  int export_stride = 1;
  std::string export_spec;
  auto* export_tsd = app.add_subcommand("export-tsd", "Write time-space and gap-trace CSVs of one run");
  add_common(export_tsd, tsd_c, false);
  export_tsd->add_option("--spec", export_spec, "Run spec YAML")->required();
  export_tsd->add_option("--stride", export_stride, "Record every N steps")->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim_c, spec_path, tsd_stride, gap_traces);
    if (evaluate->parsed()) return cmd_evaluate(eval_c, grid_path);
    if (train->parsed()) return cmd_train(train_c, strict, no_planner, iterations);
    if (stability->parsed()) return cmd_stability(stab_c, speeds, solve);
    if (gen->parsed()) return cmd_gen_data(gen_c);
    if (export_tsd->parsed()) return cmd_export_tsd(tsd_c, export_spec, export_stride);
  } catch (const CollisionFault& e) {
    std::cerr << "simulation fault: " << e.what() << '\n';
    return kExitFault;
  } catch (const NumericFault& e) {
    std::cerr << "numeric fault: " << e.what() << '\n';
    return kExitFault;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFault;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFault;
  }
  return kExitUsage;
}

}  // namespace wavesmooth::cli
