#include "wavesmooth/controllers.hpp"

#include <algorithm>
#include <cmath>

namespace wavesmooth::sim {

void ReferenceController::observe(const VehicleState& self,
                                  std::optional<control::LeaderView> leader, double dt) {
  const double v_lead = leader ? leader->speed : self.speed;
  if (ema_ < 0.0) {
    ema_ = v_lead;
    return;
  }
  const double alpha = 1.0 - std::exp(-dt / p_.ema_time);
  ema_ += alpha * (v_lead - ema_);
}

double ReferenceController::decide(const AvContext& ctx, std::mt19937_64& /*rng*/) {
  const double v = ctx.self.speed;
  const double target_from_feed = ctx.profile ? ctx.profile->query(ctx.trajectory_position) : ema_;
  const double v_target = std::min(ema_ < 0.0 ? v : ema_, target_from_feed);
  double a = p_.k_speed * (v_target - v);
  if (ctx.leader) {
    const double h_target = p_.gap_fraction * control::gap_close_gap(v);
    a += p_.k_gap * (ctx.leader->gap - h_target);
  }
  return std::clamp(a, control::kActionLow, control::kActionHigh);
}

double PolicyController::decide(const AvContext& ctx, std::mt19937_64& rng) {
  auto scaled = ctx.obs.scaled;
  if (!params_->planner_obs) {
    std::fill(scaled.begin() + control::kObsPlannerBegin, scaled.end(), scaled[0]);
  }
  return control::act(*params_, scaled, mode_, rng).action;
}

}  // namespace wavesmooth::sim
