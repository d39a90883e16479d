#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wavesmooth {

// All quantities are SI: m, s, m/s, m/s^2. Fuel is gallons (rates gal/s).

inline constexpr double kVehicleLength = 5.0;

enum class VehicleKind { TrajectoryLeader, AV, Human };

std::string_view to_string(VehicleKind kind);

struct VehicleState {
  int id = 0;
  VehicleKind kind = VehicleKind::Human;
  double position = 0.0;  // front bumper, m
  double speed = 0.0;
  double accel = 0.0;  // last applied
  /// Bumper-to-bumper distance to the vehicle ahead; NaN for the front vehicle.
  double gap = std::numeric_limits<double>::quiet_NaN();
  double length = kVehicleLength;
};

struct IdmParams {
  double v0 = 35.0;            // desired speed
  double time_headway = 1.0;   // T
  double jam_distance = 2.0;   // s0
  double max_accel = 1.55;     // a
  double comfort_decel = 2.0;  // b
  double delta = 4.0;

  bool operator==(const IdmParams&) const = default;
};

/// Fuel-rate polynomial g(v, a) in gal/s over the basis
/// {1, v, v^2, v^3, a*v, a^2*v, a, a^2}, floored at idle_floor.
struct EnergyParams {
  std::array<double, 8> coeffs{2.0e-4,
                               8.3522826446281e-06,
                               0.0,
                               1.700826446280992e-08,
                               5.67603305785124e-05,
                               0.0,
                               0.0,
                               0.0};
  double idle_floor = 2.0e-4;

  bool operator==(const EnergyParams&) const = default;
};

/// One piece of the cut-in probability on h in [h_lo, h_hi):
/// c0 + c1*h + c2*h^2 + c3*v + c4*v^2 + c5*h*v.
struct CutInPiece {
  double h_lo = 0.0;
  double h_hi = 0.0;
  std::array<double, 6> coeffs{};

  bool operator==(const CutInPiece&) const = default;
};

/// One piece of the cut-out probability on v in [v_lo, v_hi): c0 + c1*v + c2*v^2.
struct CutOutPiece {
  double v_lo = 0.0;
  double v_hi = 0.0;
  std::array<double, 3> coeffs{};

  bool operator==(const CutOutPiece&) const = default;
};

/// Lane-change model. The default coefficients are plausible placeholders,
/// not calibrated on data; all of them can be overridden from the config.
struct LcParams {
  std::vector<CutInPiece> cut_in{
      {0.0, 10.0, {0, 0, 0, 0, 0, 0}},
      {10.0, 60.0, {5.0e-5, -1.0e-5, 5.0e-7, 0, 0, 0}},
      {60.0, 250.0, {-2.5e-4, 2.5e-5, 0, 0, 0, 0}},
  };
  std::vector<CutOutPiece> cut_out{{0.0, 40.0, {1.0e-4, 0.0, 5.0e-7}}};
  double gap_ratio_mu = 0.5;
  double gap_ratio_sigma = 0.15;
  double ratio_lo = 0.2;
  double ratio_hi = 0.8;
  double min_insert_gap = 4.0;
  /// Cut-ins that make the follower's IDM command brake harder than this are
  /// suppressed; 0 turns the check off.
  double max_follower_decel = 3.0;

  bool operator==(const LcParams&) const = default;
};

struct PlannerParams {
  bool enabled = true;
  double bandwidth = 300.0;       // Gaussian kernel sigma, m
  double segment_length = 800.0;  // synthetic feed partition, m
  double delay = 180.0;           // s
  double update_interval = 60.0;  // s
  double knot_spacing = 10.0;     // m

  bool operator==(const PlannerParams&) const = default;
};

struct RewardCoeffs {
  double c1 = 0.06;   // mean platoon energy
  double c2 = 0.02;   // squared acceleration
  double c3 = 0.6;    // gap outside [h_min, h_max]
  double c4 = 0.005;  // time gap
  int platoon_size_n = 8;

  bool operator==(const RewardCoeffs&) const = default;
};

struct TrainConfig {
  double gamma = 0.999;
  double gae_lambda = 0.99;
  double clip_eps = 0.2;
  double lr = 3e-4;
  int epochs_per_iter = 5;
  int iterations = 200;
  int batch_size = 1500;
  int minibatch_size = 500;
  double value_coeff = 0.5;
  double entropy_coeff = 0.0;
  double max_grad_norm = 0.5;
  double log_std_init = 0.0;
  bool clip_value_loss = false;
  int checkpoint_every = 50;
  int jobs = 1;
  std::vector<std::string> trajectories{
      "data/train/train_1.csv", "data/train/train_2.csv",
      "data/train/train_3.csv", "data/train/train_4.csv"};

  bool operator==(const TrainConfig&) const = default;
};

struct SimConfig {
  double dt = 0.1;
  int action_repeat = 10;
  int horizon_env_steps = 50;
  /// Front to rear; the trajectory leader is always first.
  std::vector<VehicleKind> platoon_layout = default_layout(7);
  double v_lo = 0.0;
  double v_hi = 35.0;
  double a_lo = -3.0;
  double a_hi = 1.5;
  std::uint64_t seed = 0;

  IdmParams idm;
  EnergyParams energy;
  LcParams lane_change;
  PlannerParams planner;
  RewardCoeffs reward;
  TrainConfig train;

  int horizon_sim_steps() const { return action_repeat * horizon_env_steps; }

  /// Leader, one AV, then `humans` IDM vehicles.
  static std::vector<VehicleKind> default_layout(int humans);

  bool operator==(const SimConfig&) const = default;
};

/// Parses and validates a YAML config file. Absent keys take the defaults above;
/// unknown keys are rejected. Throws ConfigError naming the offending field.
SimConfig load_config(const std::string& path);

/// Same as load_config, with dotted-path `key=value` overrides applied to the
/// document before validation (e.g. "idm.T=1.2").
SimConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides);

SimConfig parse_config(const std::string& yaml_text,
                       const std::vector<std::string>& overrides = {});

/// Every field, in the same format load_config reads.
std::string serialize_config(const SimConfig& config);

/// Throws ConfigError if any invariant is violated.
void validate(const SimConfig& config);

/// FNV-1a of the serialized form, as 16 hex digits.
std::string config_hash(const SimConfig& config);

}  // namespace wavesmooth
