#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavesmooth/config.hpp"

namespace wavesmooth::energy {

inline constexpr double kMetersPerMile = 1609.34;
inline constexpr double kSecondsPerHour = 3600.0;

/// Domain of the fitted model; inputs outside are clamped.
inline constexpr double kSpeedMin = 0.0;
inline constexpr double kSpeedMax = 35.0;
inline constexpr double kAccelMin = -3.0;
inline constexpr double kAccelMax = 1.5;

/// Basis {1, v, v^2, v^3, a*v, a^2*v, a, a^2}.
std::array<double, 8> basis(double v, double a);

/// Raw polynomial value, no floor, no clamping.
double polynomial(const EnergyParams& p, double v, double a);

/// Fuel rate in gal/s. Out-of-domain inputs are clamped into the model domain
/// and counted in `clamp_count` when given.
double fuel_rate(const EnergyParams& p, double v, double a, long* clamp_count = nullptr);

/// Vehicle and powertrain constants of the reference physics model used to
/// derive the default coefficients.
struct PhysicsModel {
  double mass = 1717.0;          // kg
  double air_density = 1.225;    // kg/m^3
  double drag_area = 0.84;       // Cd*A, m^2
  double rolling_coeff = 0.015;  // Crr
  double gravity = 9.81;
  double efficiency = 0.25;
  double joules_per_gallon = 1.21e8;
  double idle_floor = 2.0e-4;  // gal/s

  double power(double v, double a) const;  // W, floored at 0
  double fuel_rate(double v, double a) const;
};

/// Least-squares fit of the basis to the physics model over the v x a grid
/// (0.5 m/s x 0.1 m/s^2) restricted to points with positive engine power; the
/// constant term is pinned to the idle floor.
EnergyParams fit_physics_model(const PhysicsModel& model = {});

/// Throws ConfigError if the model is negative or non-finite on the grid.
void validate_on_grid(const EnergyParams& p);

/// (sum of distances in miles) / (sum of gallons); nullopt if total fuel is 0.
std::optional<double> system_mpg(std::span<const double> distances_m,
                                 std::span<const double> fuel_gal);

/// Descriptor that must match between a controlled and a baseline run.
struct RunDescriptor {
  std::string trajectory_id;
  std::string layout;
  std::uint64_t seed = 0;
  bool lc_enabled = false;
  bool operator==(const RunDescriptor&) const = default;
};

struct RunSummary {
  RunDescriptor descriptor;
  double system_mpg = 0.0;
};

/// 100 * (controlled / baseline - 1). Throws std::invalid_argument if the
/// descriptors differ or the baseline MPG is not positive.
double mpg_improvement(const RunSummary& controlled, const RunSummary& baseline);

/// One vehicle's position sample for time-space records.
struct TsdRecord {
  int vehicle_id = 0;
  double t = 0.0;
  double x = 0.0;
  double v = 0.0;
};

/// Number of vehicles whose front crosses `x` during [t_begin, t_begin + window),
/// scaled to vehicles per hour. Records must be grouped by vehicle in time order.
double throughput(std::span<const TsdRecord> records, double x, double t_begin, double window);

/// Crossing times of position x, one per vehicle that crosses, sorted.
std::vector<double> crossing_times(std::span<const TsdRecord> records, double x);

}  // namespace wavesmooth::energy
