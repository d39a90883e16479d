#include "wavesmooth/platoon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wavesmooth/error.hpp"
#include "wavesmooth/idm.hpp"

namespace wavesmooth::dynamics {

void recompute_gaps(std::span<VehicleState> states) {
  if (states.empty()) return;
  states[0].gap = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 1; i < states.size(); ++i) {
    states[i].gap = states[i - 1].position - states[i - 1].length - states[i].position;
  }
}

void check_platoon(std::span<const VehicleState> states, long step) {
  for (std::size_t i = 1; i < states.size(); ++i) {
    const double gap = states[i - 1].position - states[i - 1].length - states[i].position;
    if (!(gap > 0.0)) throw CollisionFault(states[i].id, states[i - 1].id, step, gap);
  }
}

std::vector<VehicleState> step_platoon(std::span<const VehicleState> states,
                                       std::span<const double> accels, double dt,
                                       std::optional<LeaderUpdate> leader, long step,
                                       double v_max) {
  if (accels.size() != states.size()) {
    throw std::invalid_argument("step_platoon: one acceleration per vehicle required");
  }
  std::vector<VehicleState> next(states.begin(), states.end());
  for (std::size_t i = 0; i < next.size(); ++i) {
    auto& veh = next[i];
    if (i == 0 && leader) {
      veh.accel = (leader->speed - veh.speed) / dt;
      veh.speed = leader->speed;
      veh.position = leader->position;
      continue;
    }
    if (!std::isfinite(accels[i])) {
      throw std::invalid_argument("step_platoon: non-finite acceleration for vehicle " +
                                  std::to_string(veh.id));
    }
    const double v_new = std::clamp(veh.speed + accels[i] * dt, 0.0, v_max);
    veh.accel = (v_new - veh.speed) / dt;
    veh.speed = v_new;
    veh.position += v_new * dt;
  }
  check_platoon(next, step);
  recompute_gaps(next);
  return next;
}

std::vector<VehicleState> make_equilibrium_platoon(const std::vector<VehicleKind>& layout,
                                                   const IdmParams& idm, double speed,
                                                   double front_position) {
  const double v_eq = std::min(speed, idm.v0 - 1.0);
  const double gap = equilibrium_gap(idm, std::max(0.0, v_eq));
  std::vector<VehicleState> states(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i) {
    auto& s = states[i];
    s.id = static_cast<int>(i);
    s.kind = layout[i];
    s.speed = speed;
    s.accel = 0.0;
    // Index 1 sits at front_position; the leader is one slot ahead.
    s.position = front_position - (static_cast<double>(i) - 1.0) * (gap + kVehicleLength);
  }
  recompute_gaps(states);
  return states;
}

}  // namespace wavesmooth::dynamics
