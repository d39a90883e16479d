#include "wavesmooth/energy.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "wavesmooth/error.hpp"

namespace wavesmooth::energy {

std::array<double, 8> basis(double v, double a) {
  return {1.0, v, v * v, v * v * v, a * v, a * a * v, a, a * a};
}

double polynomial(const EnergyParams& p, double v, double a) {
  const auto b = basis(v, a);
  double sum = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) sum += p.coeffs[i] * b[i];
  return sum;
}

double fuel_rate(const EnergyParams& p, double v, double a, long* clamp_count) {
  const double vc = std::clamp(v, kSpeedMin, kSpeedMax);
  const double ac = std::clamp(a, kAccelMin, kAccelMax);
  if (clamp_count && (vc != v || ac != a)) ++*clamp_count;
  return std::max(p.idle_floor, polynomial(p, vc, ac));
}

double PhysicsModel::power(double v, double a) const {
  const double p = mass * a * v + 0.5 * air_density * drag_area * v * v * v +
                   rolling_coeff * mass * gravity * v;
  return std::max(0.0, p);
}

double PhysicsModel::fuel_rate(double v, double a) const {
  return power(v, a) / (efficiency * joules_per_gallon) + idle_floor;
}

namespace {

template <typename F>
void for_each_grid_point(F&& f) {
  for (int i = 0; i <= 70; ++i) {
    for (int j = 0; j <= 45; ++j) f(0.5 * i, -3.0 + 0.1 * j);
  }
}

}  // namespace

EnergyParams fit_physics_model(const PhysicsModel& model) {
  std::vector<std::array<double, 8>> rows;
  std::vector<double> targets;
  for_each_grid_point([&](double v, double a) {
    if (model.power(v, a) <= 0.0) return;
    rows.push_back(basis(v, a));
    targets.push_back(model.fuel_rate(v, a) - model.idle_floor);
  });
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), 7);
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < 7; ++c) X(static_cast<Eigen::Index>(r), c) = rows[r][c + 1];
    y(static_cast<Eigen::Index>(r)) = targets[r];
  }
  const Eigen::VectorXd w = X.colPivHouseholderQr().solve(y);
  EnergyParams p;
  p.idle_floor = model.idle_floor;
  p.coeffs[0] = model.idle_floor;
  for (int c = 0; c < 7; ++c) p.coeffs[c + 1] = w(c);
  return p;
}

void validate_on_grid(const EnergyParams& p) {
  if (!std::isfinite(p.idle_floor) || p.idle_floor < 0.0) {
    throw ConfigError("energy.idle_floor", "must be finite and >= 0, got " + std::to_string(p.idle_floor));
  }
  for_each_grid_point([&](double v, double a) {
    const double g = fuel_rate(p, v, a);
    // max() with the floor would hide a NaN polynomial, so check it separately.
    if (!std::isfinite(polynomial(p, v, a)) || !std::isfinite(g) || g < 0.0) {
      throw ConfigError("energy.coeffs", "fuel rate invalid at v=" + std::to_string(v) +
                                             ", a=" + std::to_string(a));
    }
  });
}

std::optional<double> system_mpg(std::span<const double> distances_m,
                                 std::span<const double> fuel_gal) {
  if (distances_m.size() != fuel_gal.size()) {
    throw std::invalid_argument("system_mpg: distance and fuel lists differ in length");
  }
  double miles = 0.0;
  double gallons = 0.0;
  for (std::size_t i = 0; i < distances_m.size(); ++i) {
    if (distances_m[i] < 0.0) throw std::invalid_argument("system_mpg: negative distance");
    miles += distances_m[i] / kMetersPerMile;
    gallons += fuel_gal[i];
  }
  if (!(gallons > 0.0)) return std::nullopt;
  return miles / gallons;
}

double mpg_improvement(const RunSummary& controlled, const RunSummary& baseline) {
  if (!(controlled.descriptor == baseline.descriptor)) {
    throw std::invalid_argument("mpg_improvement: runs differ (trajectory '" +
                                controlled.descriptor.trajectory_id + "' vs '" +
                                baseline.descriptor.trajectory_id + "')");
  }
  if (!(baseline.system_mpg > 0.0)) {
    throw std::invalid_argument("mpg_improvement: baseline MPG must be positive");
  }
  return 100.0 * (controlled.system_mpg / baseline.system_mpg - 1.0);
}

std::vector<double> crossing_times(std::span<const TsdRecord> records, double x) {
  std::map<int, std::vector<const TsdRecord*>> by_vehicle;
  for (const auto& r : records) by_vehicle[r.vehicle_id].push_back(&r);
  std::vector<double> times;
  for (auto& [id, track] : by_vehicle) {
    std::stable_sort(track.begin(), track.end(),
                     [](const TsdRecord* a, const TsdRecord* b) { return a->t < b->t; });
    for (std::size_t k = 1; k < track.size(); ++k) {
      const auto& a = *track[k - 1];
      const auto& b = *track[k];
      if (a.x < x && b.x >= x) {
        const double frac = (x - a.x) / (b.x - a.x);
        times.push_back(a.t + frac * (b.t - a.t));
        break;
      }
    }
  }
  std::sort(times.begin(), times.end());
  return times;
}

double throughput(std::span<const TsdRecord> records, double x, double t_begin, double window) {
  if (!(window > 0.0)) throw std::invalid_argument("throughput: window must be positive");
  const auto times = crossing_times(records, x);
  const auto count = std::count_if(times.begin(), times.end(), [&](double t) {
    return t >= t_begin && t < t_begin + window;
  });
  return static_cast<double>(count) * kSecondsPerHour / window;
}

}  // namespace wavesmooth::energy
