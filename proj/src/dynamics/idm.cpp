#include "wavesmooth/idm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace wavesmooth::dynamics {

double desired_gap(const IdmParams& p, double v, double approach_rate) {
  const double dynamic =
      v * p.time_headway + v * approach_rate / (2.0 * std::sqrt(p.max_accel * p.comfort_decel));
  return p.jam_distance + std::max(0.0, dynamic);
}

double idm_accel(const IdmParams& p, double v, double v_lead, double s) {
  if (!(s > 0.0)) {
    throw std::invalid_argument("idm_accel: non-positive gap " + std::to_string(s));
  }
  const double ratio = desired_gap(p, v, v - v_lead) / s;
  return p.max_accel * (1.0 - std::pow(v / p.v0, p.delta) - ratio * ratio);
}

double idm_command(const IdmParams& p, double v, double v_lead, double s, double decel_floor) {
  return std::clamp(idm_accel(p, v, v_lead, s), decel_floor, p.max_accel);
}

double equilibrium_gap(const IdmParams& p, double v) {
  if (!(v >= 0.0 && v < p.v0)) {
    throw std::domain_error("equilibrium_gap: no finite equilibrium at v=" + std::to_string(v));
  }
  return (p.jam_distance + v * p.time_headway) / std::sqrt(1.0 - std::pow(v / p.v0, p.delta));
}

StabilityMargin string_stability(const IdmParams& p, double v) {
  if (!(v > 0.0 && v < p.v0)) {
    throw std::domain_error("string_stability: need 0 < v < v0, got " + std::to_string(v));
  }
  constexpr double h = 1e-4;
  const double s = equilibrium_gap(p, v);
  // a(s, v, w) with w = v_lead - v.
  auto a = [&](double gap, double speed, double rel) {
    return idm_accel(p, speed, speed + rel, gap);
  };
  StabilityMargin m;
  m.f_s = (a(s + h, v, 0.0) - a(s - h, v, 0.0)) / (2 * h);
  m.f_v = (a(s, v + h, 0.0) - a(s, v - h, 0.0)) / (2 * h);
  m.f_rel = (a(s, v, h) - a(s, v, -h)) / (2 * h);
  m.margin = 0.5 * m.f_v * m.f_v - m.f_v * m.f_rel - m.f_s;
  return m;
}

double stability_boundary(const IdmParams& p, double lo, double hi, double tol) {
  double m_lo = string_stability(p, lo).margin;
  const double m_hi = string_stability(p, hi).margin;
  if ((m_lo < 0) == (m_hi < 0)) return std::numeric_limits<double>::quiet_NaN();
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double m_mid = string_stability(p, mid).margin;
    if ((m_mid < 0) == (m_lo < 0)) {
      lo = mid;
      m_lo = m_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace wavesmooth::dynamics
