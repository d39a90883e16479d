#pragma once

#include <string_view>

namespace wavesmooth::control {

inline constexpr double kFailsafeTtc = 6.0;        // s
inline constexpr double kGapCloseMinGap = 120.0;   // m
inline constexpr double kGapCloseTimeGap = 6.0;    // s
inline constexpr double kMinAccel = -3.0;
inline constexpr double kMaxAccel = 1.5;
inline constexpr double kMaxSpeed = 35.0;

/// Closing speed with the ego speed exaggerated: v_av*(1 + 4/30) + 1 - v_lead.
double v_diff(double v_av, double v_lead);

/// h / v_diff when closing, +inf otherwise.
double ttc(double h, double v_diff);

/// Failsafe threshold 6*v_diff; 0 when not closing.
double failsafe_gap(double v_av, double v_lead);

/// Gap-closing threshold max(120, 6*v_av).
double gap_close_gap(double v_av);

enum class Branch { Failsafe, GapClose, PassThrough };

std::string_view to_string(Branch branch);

struct WrapperDecision {
  double raw_action = 0.0;
  double ttc = 0.0;
  double h_min = 0.0;
  double h_max = 0.0;
  Branch branch = Branch::PassThrough;
  double a_out = 0.0;          // after failsafe / gap-closing
  double applied_accel = 0.0;  // a_out clipped so the next speed stays in [0, 35]
};

/// Failsafe (-3) if ttc <= 6, else gap-closing (+1.5) if h >= h_max, else the
/// raw action; then clipped to keep v_av + a*dt inside [0, 35].
WrapperDecision wrap_action(double raw_action, double v_av, double v_lead, double h, double dt);

/// Applied acceleration when there is no vehicle ahead: the gap-closing branch.
WrapperDecision wrap_free_road(double raw_action, double v_av, double dt);

}  // namespace wavesmooth::control
