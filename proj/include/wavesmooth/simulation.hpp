#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "wavesmooth/config.hpp"
#include "wavesmooth/energy.hpp"
#include "wavesmooth/lane_change.hpp"
#include "wavesmooth/observation.hpp"
#include "wavesmooth/planner.hpp"
#include "wavesmooth/trajectory.hpp"
#include "wavesmooth/wrapper.hpp"

namespace wavesmooth::sim {

/// What a controller sees at a decision boundary.
struct AvContext {
  const VehicleState& self;
  std::optional<control::LeaderView> leader;
  const control::Observation& obs;
  /// Target-speed profile in trajectory coordinates; null without planner.
  const planner::TargetSpeedProfile* profile;
  double trajectory_position;  // self position in profile coordinates
  double t;                    // simulation time, s
};

/// Decides the raw action of one AV. One instance per AV.
class AvController {
 public:
  virtual ~AvController() = default;

  /// Raw action in [-3, 1.5], held until the next decision.
  virtual double decide(const AvContext& ctx, std::mt19937_64& rng) = 0;

  /// Called every step before decisions, for controllers that filter signals.
  virtual void observe(const VehicleState& /*self*/, std::optional<control::LeaderView> /*leader*/,
                       double /*dt*/) {}

  /// True if the AV simply drives IDM like a human (no wrapper); used for baselines.
  virtual bool drives_idm() const { return false; }
};

using ControllerFactory = std::function<std::unique_ptr<AvController>(int av_id)>;

/// IDM stand-in for AVs; makes a controlled run identical to the all-human baseline.
class IdmController final : public AvController {
 public:
  double decide(const AvContext&, std::mt19937_64&) override { return 0.0; }
  bool drives_idm() const override { return true; }
};

struct GapSample {
  double t = 0.0;
  double h = 0.0;
  double h_min = 0.0;
  double h_max = 0.0;
  control::Branch branch = control::Branch::PassThrough;
};

struct VehicleTotals {
  int id = 0;
  VehicleKind kind = VehicleKind::Human;
  double distance_m = 0.0;
  double fuel_gal = 0.0;
  long samples = 0;
  double speed_mean = 0.0;
  double speed_m2 = 0.0;  // Welford accumulator

  double speed_std() const;
};

struct RunMetrics {
  std::map<int, VehicleTotals> vehicles;  // every vehicle that ever existed
  double fuel_stepwise = 0.0;             // sum over steps of sum_i fuel_rate*dt
  std::vector<double> throughput_positions;
  std::vector<std::vector<double>> crossings;  // per position, sorted times
  std::map<int, std::vector<GapSample>> gap_traces;  // per controlled AV
  std::array<long, 3> branch_counts{};  // indexed by control::Branch
  std::vector<lanechange::LaneChangeEvent> events;
  long collisions = 0;
  long steps = 0;
  long energy_clamps = 0;
  int last_follower_id = -1;  // rear vehicle at the start

  /// System MPG over all vehicles except the trajectory leader.
  std::optional<double> system_mpg() const;
  /// Vehicles per hour between the first and last crossing of position k.
  double throughput_vph(std::size_t k) const;
  double last_follower_speed_std() const;
};

struct SimSetup {
  SimConfig config;
  std::shared_ptr<const data::LeaderTrajectory> trajectory;
  std::size_t start_index = 0;
  /// Number of dt steps; 0 means until the trajectory ends.
  long steps = 0;
  std::vector<VehicleKind> layout;
  bool lc_enabled = false;
  bool planner_enabled = true;
  bool warmup = true;
  std::uint64_t seed = 0;
  /// Store TSD records every `tsd_stride` steps (0 disables).
  int tsd_stride = 0;
  bool record_gap_traces = false;
  std::vector<double> throughput_positions;
};

/// Per-step results exposed for environments that drive the simulation.
struct StepInfo {
  /// Fuel rate (gal/s) of each vehicle in platoon order after the step.
  std::vector<double> fuel_rates;
  /// Wrapper outcome per controlled AV id for the step just taken.
  std::map<int, control::WrapperDecision> decisions;
};

/// One platoon behind a replayed leader. Each step runs, in order:
///   (1) leader speed from the replay,
///   (2) AV decisions at decision boundaries and every vehicle's acceleration
///       from the pre-step snapshot,
///   (3) lane-change events,
///   (4) integration,
///   (5) metric accumulation.
class Simulation {
 public:
  Simulation(SimSetup setup, ControllerFactory factory);

  bool done() const { return step_ >= total_steps_; }
  /// Throws CollisionFault on a non-positive gap.
  void step();
  void run();

  long step_index() const { return step_; }
  long total_steps() const { return total_steps_; }
  double time() const { return static_cast<double>(step_) * setup_.config.dt; }
  bool at_decision_boundary() const { return step_ % setup_.config.action_repeat == 0; }

  const std::vector<VehicleState>& vehicles() const { return vehicles_; }
  const RunMetrics& metrics() const { return metrics_; }
  RunMetrics take_metrics() { return std::move(metrics_); }
  const std::vector<energy::TsdRecord>& tsd() const { return tsd_; }
  const StepInfo& last_step() const { return last_; }
  const SimSetup& setup() const { return setup_; }

  /// Platoon index of the vehicle with this id, or -1.
  int index_of(int id) const;
  std::optional<control::LeaderView> leader_of(std::size_t index) const;

  /// Observation of the vehicle at `index` as built at decision time.
  control::Observation observe(std::size_t index) const;

  /// Leader position offset between simulation and trajectory coordinates.
  double trajectory_offset() const { return trajectory_offset_; }
  /// Trajectory time of the current step (s since the trajectory start).
  double trajectory_time() const;
  /// Distance the leader covers over the simulated span.
  double leader_distance() const;

 private:
  const planner::TargetSpeedProfile* current_profile();
  void record_tsd();

  SimSetup setup_;
  std::vector<VehicleState> vehicles_;
  std::map<int, std::unique_ptr<AvController>> controllers_;
  std::map<int, control::SpeedHistory> histories_;
  std::map<int, double> held_actions_;
  std::map<int, bool> engaged_;  // AV has left warm-up and decided at least once
  std::unique_ptr<planner::FeedService> feed_;
  std::shared_ptr<const planner::TargetSpeedProfile> profile_;
  std::vector<double> leader_positions_;  // trajectory coordinates
  double trajectory_offset_ = 0.0;
  std::mt19937_64 controller_rng_;
  std::mt19937_64 lc_rng_;
  int next_id_ = 0;
  long step_ = 0;
  long total_steps_ = 0;
  RunMetrics metrics_;
  std::vector<energy::TsdRecord> tsd_;
  StepInfo last_;
};

/// Leader, then `platoon_size` followers with an AV at every index that is a
/// multiple of round(1/penetration); penetration 0 gives an all-human platoon.
std::vector<VehicleKind> make_layout(int platoon_size, double penetration);

}  // namespace wavesmooth::sim
