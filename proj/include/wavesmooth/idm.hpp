#pragma once

#include "wavesmooth/config.hpp"

namespace wavesmooth::dynamics {

/// Desired dynamic gap s*(v, dv) = s0 + max(0, v*T + v*dv / (2*sqrt(a*b))),
/// with dv = v - v_lead the approach rate.
double desired_gap(const IdmParams& p, double v, double approach_rate);

/// Unclipped IDM acceleration. Requires s > 0 (throws std::invalid_argument).
double idm_accel(const IdmParams& p, double v, double v_lead, double s);

/// idm_accel clipped to [decel_floor, a_max]; this is what humans apply.
double idm_command(const IdmParams& p, double v, double v_lead, double s,
                   double decel_floor = -3.0);

/// Steady-state gap at speed v: s*(v, 0) / sqrt(1 - (v/v0)^delta).
/// Throws std::domain_error unless 0 <= v < v0.
double equilibrium_gap(const IdmParams& p, double v);

struct StabilityMargin {
  double margin = 0.0;  // >= 0 means string stable
  double f_s = 0.0;     // da/ds
  double f_v = 0.0;     // da/dv at fixed relative speed
  double f_rel = 0.0;   // da/d(v_lead - v)
  bool stable() const { return margin >= 0.0; }
};

/// Linear string-stability criterion 0.5*f_v^2 - f_v*f_rel - f_s >= 0 at the
/// equilibrium (v, s_e(v)), with partials from central differences (h = 1e-4).
/// Requires 0 < v < v0.
StabilityMargin string_stability(const IdmParams& p, double v);

/// Bisection for the speed where the margin changes sign in [lo, hi].
/// Returns NaN if the margin has the same sign at both ends.
double stability_boundary(const IdmParams& p, double lo, double hi, double tol = 1e-6);

}  // namespace wavesmooth::dynamics
