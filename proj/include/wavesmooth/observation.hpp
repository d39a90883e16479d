#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <optional>

#include "wavesmooth/planner.hpp"

namespace wavesmooth::control {

/// Fixed layout of the policy input:
///   0 v_av, 1 v_lead, 2 h, 3 h_min, 4 h_max,
///   5..9 ego speed history (oldest first, most recent last),
///   10 v_sp(x), 11 v_sp(x+200), 12 v_sp(x+500), 13 v_sp(x+1000).
inline constexpr std::size_t kObsSize = 14;
inline constexpr std::size_t kHistoryLength = 5;
inline constexpr std::size_t kObsHistoryBegin = 5;
inline constexpr std::size_t kObsPlannerBegin = 10;

inline constexpr double kSpeedScale = 35.0;
inline constexpr double kGapScale = 250.0;
inline constexpr double kPhantomGap = 250.0;
inline constexpr double kPhantomSpeed = 35.0;

/// x -> 2x/35 - 1, clipped to [-1, 1].
double scale_speed(double v);
/// x -> 2*min(x, 250)/250 - 1, clipped to [-1, 1].
double scale_gap(double h);

struct Observation {
  std::array<double, kObsSize> raw{};     // physical units
  std::array<double, kObsSize> scaled{};  // each in [-1, 1]
};

/// Ego speeds at simulation resolution; pre-filled with the initial speed.
class SpeedHistory {
 public:
  explicit SpeedHistory(double initial_speed = 0.0);
  void push(double v);
  /// Oldest first.
  std::array<double, kHistoryLength> values() const;

 private:
  std::deque<double> buffer_;
};

struct LeaderView {
  double speed;
  double gap;
};

/// Builds the 14-scalar observation. Without a leader a phantom one at 250 m
/// and 35 m/s is encoded. Without a profile (planner disabled) the four target
/// speeds are replaced by the ego speed.
Observation build_observation(double v_av, double position, const SpeedHistory& history,
                              std::optional<LeaderView> leader,
                              const planner::TargetSpeedProfile* profile);

}  // namespace wavesmooth::control
