#pragma once

#include <memory>

#include "wavesmooth/policy.hpp"
#include "wavesmooth/simulation.hpp"

namespace wavesmooth::sim {

/// Scripted "gap-buffer smoother": tracks min(leader speed EMA, planner target)
/// while regulating the gap toward gap_fraction * h_max.
struct ReferenceParams {
  double ema_time = 60.0;     // s, leader-speed filter time constant
  double k_speed = 0.3;       // 1/s
  double k_gap = 0.01;        // 1/s^2
  double gap_fraction = 0.8;  // of h_max

  bool operator==(const ReferenceParams&) const = default;
};

class ReferenceController final : public AvController {
 public:
  explicit ReferenceController(ReferenceParams params = {}) : p_(params) {}

  double decide(const AvContext& ctx, std::mt19937_64& rng) override;
  void observe(const VehicleState& self, std::optional<control::LeaderView> leader,
               double dt) override;

  double leader_speed_estimate() const { return ema_; }

 private:
  ReferenceParams p_;
  double ema_ = -1.0;
};

/// Runs a trained actor. Policies trained without planner input see the ego
/// speed in the four target-speed slots.
class PolicyController final : public AvController {
 public:
  PolicyController(std::shared_ptr<const control::PolicyParameters> params,
                   control::ActMode mode = control::ActMode::Deterministic)
      : params_(std::move(params)), mode_(mode) {}

  double decide(const AvContext& ctx, std::mt19937_64& rng) override;

 private:
  std::shared_ptr<const control::PolicyParameters> params_;
  control::ActMode mode_;
};

/// Controller whose action is set from outside before each decision.
class ExternalController final : public AvController {
 public:
  void set_action(double a) { action_ = a; }
  double decide(const AvContext&, std::mt19937_64&) override { return action_; }

 private:
  double action_ = 0.0;
};

}  // namespace wavesmooth::sim
