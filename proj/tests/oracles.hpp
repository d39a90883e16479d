#pragma once

// Test-side reference implementations. They are written from the textbook
// formulas and share no code with the library.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

struct Idm {
  double v0 = 35.0, T = 1.0, s0 = 2.0, a = 1.55, b = 2.0, delta = 4.0;

  double accel(double v, double v_lead, double s) const {
    const double dyn = v * T + v * (v - v_lead) / (2.0 * std::sqrt(a * b));
    const double s_star = s0 + std::max(0.0, dyn);
    return a * (1.0 - std::pow(v / v0, delta) - (s_star / s) * (s_star / s));
  }
};

/// Gap where accel(v, v, s) = 0, by bisection on s.
inline double equilibrium_gap_bisect(const Idm& m, double v) {
  double lo = 1e-6;
  double hi = 1e6;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (m.accel(v, v, mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Amplitude ratio |v_20 - v_e| / |v_2 - v_e| (maxima over the run) when the
/// head of a 20-follower platoon driving at v dips by `depth` for `width`
/// seconds with a raised-cosine profile. > 1 means the dip grew.
inline double perturbation_growth(const Idm& m, double v, double depth = 0.5,
                                  double width = 60.0, double horizon = 600.0,
                                  int followers = 20, double dt = 0.05) {
  const double len = 5.0;
  const double s_e = equilibrium_gap_bisect(m, v);
  const int n = followers + 1;
  std::vector<double> x(n), s(n, v), acc(n, 0.0);
  for (int i = 0; i < n; ++i) x[i] = -i * (s_e + len);
  std::vector<double> peak(n, 0.0);
  const int steps = static_cast<int>(horizon / dt);
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    const double dip = t < width ? 0.5 * depth * (1.0 - std::cos(2.0 * std::numbers::pi * t / width)) : 0.0;
    for (int i = 1; i < n; ++i) acc[i] = m.accel(s[i], s[i - 1], x[i - 1] - x[i] - len);
    s[0] = v - dip;
    x[0] += s[0] * dt;
    for (int i = 1; i < n; ++i) {
      s[i] = std::max(0.0, s[i] + acc[i] * dt);
      x[i] += s[i] * dt;
      peak[i] = std::max(peak[i], std::abs(s[i] - v));
    }
  }
  return peak[n - 1] / peak[1];
}


/// Advantage at t as the explicit sum of (gamma*lambda)^k delta_{t+k}, where
/// the sum stops after a terminal step. O(T^2).
inline std::vector<double> gae_brute_force(const std::vector<double>& r, const std::vector<double>& v,
                                           const std::vector<bool>& done, double bootstrap,
                                           double gamma, double lambda) {
  const std::size_t n = r.size();
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0.0;
    double w = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      const double next = done[k] ? 0.0 : (k + 1 < n ? v[k + 1] : bootstrap);
      sum += w * (r[k] + gamma * next - v[k]);
      if (done[k]) break;
      w *= gamma * lambda;
    }
    adv[t] = sum;
  }
  return adv;
}

}  // namespace oracle
