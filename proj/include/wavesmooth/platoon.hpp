#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wavesmooth/config.hpp"

namespace wavesmooth::dynamics {

/// Replayed state of the front vehicle for the step being integrated.
struct LeaderUpdate {
  double position;
  double speed;
};

/// Semi-implicit Euler step for every vehicle:
///   v' = clamp(v + a*dt, 0, v_max), x' = x + v'*dt,
/// with the recorded accel being the applied (v' - v)/dt. The front vehicle
/// follows `leader` when given. Gaps are recomputed; a gap <= 0 throws
/// CollisionFault carrying both ids and `step`.
std::vector<VehicleState> step_platoon(std::span<const VehicleState> states,
                                       std::span<const double> accels, double dt,
                                       std::optional<LeaderUpdate> leader, long step,
                                       double v_max = 35.0);

/// Sets gap for every follower from the positions; the front gap is NaN.
void recompute_gaps(std::span<VehicleState> states);

/// Throws CollisionFault if ordering or gap positivity is violated.
void check_platoon(std::span<const VehicleState> states, long step);

/// Builds a platoon at IDM equilibrium spacing for `speed`: the first
/// follower's front bumper sits at `front_position`, the leader one
/// equilibrium gap plus a vehicle length ahead of it, the rest behind.
/// Speeds at or above v0 - 1 use the gap at v0 - 1.
std::vector<VehicleState> make_equilibrium_platoon(const std::vector<VehicleKind>& layout,
                                                   const IdmParams& idm, double speed,
                                                   double front_position = 0.0);

}  // namespace wavesmooth::dynamics
