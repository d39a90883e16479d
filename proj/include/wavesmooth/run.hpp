#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wavesmooth/config.hpp"
#include "wavesmooth/controllers.hpp"
#include "wavesmooth/simulation.hpp"

namespace wavesmooth::sim {

enum class ControllerKind { Idm, Reference, Policy };

std::string_view to_string(ControllerKind kind);
ControllerKind parse_controller_kind(const std::string& name);

/// One evaluation run. YAML keys match the field names.
struct RunSpec {
  std::string trajectory;  // CSV path
  int platoon_size = 200;
  double penetration = 0.04;
  bool lc_enabled = false;
  bool planner_enabled = true;
  bool warmup = true;
  ControllerKind controller = ControllerKind::Reference;
  std::string checkpoint;  // required for the policy controller
  std::uint64_t seed = 0;
  /// Empty: one position at half the leader's travelled distance.
  std::vector<double> throughput_positions;
  ReferenceParams reference;

  std::vector<VehicleKind> layout() const { return make_layout(platoon_size, penetration); }
};

RunSpec parse_run_spec(const std::string& yaml_text);
/// Throws ConfigError naming the file and field.
RunSpec load_run_spec(const std::string& path);

struct RunOptions {
  int tsd_stride = 0;
  bool gap_traces = false;
  /// Pre-loaded policy; loaded from spec.checkpoint when null.
  std::shared_ptr<const control::PolicyParameters> policy;
};

struct RunResult {
  RunSpec spec;
  std::string trajectory_id;
  RunMetrics metrics;
  std::vector<energy::TsdRecord> tsd;
  double system_mpg = 0.0;
  double throughput_vph = 0.0;  // at the first throughput position
};

/// Whole-trajectory run. Throws CollisionFault (with ids and step) on a collision.
RunResult run_episode(const RunSpec& spec, const SimConfig& config, const RunOptions& options = {});

/// The same spec with every AV driving IDM.
RunSpec baseline_of(const RunSpec& spec);

struct PairedResult {
  RunResult controlled;
  RunResult baseline;
  double mpg_improvement_pct = 0.0;
  double throughput_delta_pct = 0.0;
};

PairedResult run_paired(const RunSpec& spec, const SimConfig& config, const RunOptions& options = {});

/// Evaluation grid; every combination is run against its all-IDM pairing.
struct EvalGrid {
  std::vector<std::string> trajectories;
  std::vector<double> penetrations{0.04, 0.10};
  std::vector<bool> lc{false, true};
  std::vector<std::uint64_t> seeds{0};
  int platoon_size = 200;
  bool planner_enabled = true;
  ControllerKind controller = ControllerKind::Reference;
  std::string checkpoint;
  ReferenceParams reference;
};

EvalGrid parse_eval_grid(const std::string& yaml_text);
EvalGrid load_eval_grid(const std::string& path);

struct CellSummary {
  std::string trajectory_id;
  double penetration = 0.0;
  bool lc_enabled = false;
  int seeds = 0;
  double mpg_improvement_mean = 0.0;
  double mpg_improvement_std = 0.0;
  double throughput_delta_mean = 0.0;
  double throughput_delta_std = 0.0;
};

struct EvalResult {
  std::vector<PairedResult> runs;  // grid order: trajectory, penetration, lc, seed
  std::vector<CellSummary> cells;
};

/// Runs up to `jobs` pairs concurrently; results are stored in grid order.
EvalResult evaluate_matrix(const EvalGrid& grid, const SimConfig& config, int jobs = 1);

/// `run_id,traj_id,penetration,lc_enabled,system_mpg,mpg_improvement_pct,throughput_vph,collisions`
void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const std::string& run_id, const RunResult& run,
                       double improvement_pct);
void write_metrics_csv(const std::string& path, const std::vector<PairedResult>& runs);
void write_summary_csv(const std::string& path, const std::vector<CellSummary>& cells);

/// `vehicle_id,t,x,v`
void export_tsd(const std::vector<energy::TsdRecord>& records, const std::string& path);
/// `t,h,h_min,h_max,branch`
void export_gap_trace(const RunMetrics& metrics, int av_id, const std::string& path);

}  // namespace wavesmooth::sim
