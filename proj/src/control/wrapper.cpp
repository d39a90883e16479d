#include "wavesmooth/wrapper.hpp"

#include <algorithm>
#include <limits>

namespace wavesmooth::control {

namespace {

// 30 * v_diff. Exact for speeds on a 0.5 m/s grid, so ttc == 6 lands on 6.0
// and the ttc and gap forms of the failsafe agree at the boundary.
double closing_x30(double v_av, double v_lead) { return 34.0 * v_av + 30.0 - 30.0 * v_lead; }

}  // namespace

double v_diff(double v_av, double v_lead) { return closing_x30(v_av, v_lead) / 30.0; }

double ttc(double h, double closing) {
  return closing > 0.0 ? h / closing : std::numeric_limits<double>::infinity();
}

double failsafe_gap(double v_av, double v_lead) {
  const double c = closing_x30(v_av, v_lead);
  return c > 0.0 ? c / 5.0 : 0.0;
}

double gap_close_gap(double v_av) { return std::max(kGapCloseMinGap, kGapCloseTimeGap * v_av); }

std::string_view to_string(Branch branch) {
  switch (branch) {
    case Branch::Failsafe:
      return "failsafe";
    case Branch::GapClose:
      return "gap_close";
    case Branch::PassThrough:
      return "pass";
  }
  return "?";
}

namespace {

double clip_to_speed_bounds(double a, double v_av, double dt) {
  return std::clamp(a, (0.0 - v_av) / dt, (kMaxSpeed - v_av) / dt);
}

}  // namespace

WrapperDecision wrap_action(double raw_action, double v_av, double v_lead, double h, double dt) {
  WrapperDecision d;
  d.raw_action = raw_action;
  const double c = closing_x30(v_av, v_lead);
  d.ttc = c > 0.0 ? 30.0 * h / c : std::numeric_limits<double>::infinity();
  d.h_min = failsafe_gap(v_av, v_lead);
  d.h_max = gap_close_gap(v_av);
  if (d.ttc <= kFailsafeTtc) {
    d.branch = Branch::Failsafe;
    d.a_out = kMinAccel;
  } else if (h >= d.h_max) {
    d.branch = Branch::GapClose;
    d.a_out = kMaxAccel;
  } else {
    d.branch = Branch::PassThrough;
    d.a_out = raw_action;
  }
  d.applied_accel = clip_to_speed_bounds(d.a_out, v_av, dt);
  return d;
}

WrapperDecision wrap_free_road(double raw_action, double v_av, double dt) {
  WrapperDecision d;
  d.raw_action = raw_action;
  d.ttc = std::numeric_limits<double>::infinity();
  d.h_min = 0.0;
  d.h_max = gap_close_gap(v_av);
  d.branch = Branch::GapClose;
  d.a_out = kMaxAccel;
  d.applied_accel = clip_to_speed_bounds(d.a_out, v_av, dt);
  return d;
}

}  // namespace wavesmooth::control
