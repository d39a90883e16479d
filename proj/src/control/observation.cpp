#include "wavesmooth/observation.hpp"

#include <algorithm>

#include "wavesmooth/wrapper.hpp"

namespace wavesmooth::control {

double scale_speed(double v) { return std::clamp(2.0 * v / kSpeedScale - 1.0, -1.0, 1.0); }

double scale_gap(double h) {
  return std::clamp(2.0 * std::min(h, kGapScale) / kGapScale - 1.0, -1.0, 1.0);
}

SpeedHistory::SpeedHistory(double initial_speed)
    : buffer_(kHistoryLength, initial_speed) {}

void SpeedHistory::push(double v) {
  buffer_.push_back(v);
  buffer_.pop_front();
}

std::array<double, kHistoryLength> SpeedHistory::values() const {
  std::array<double, kHistoryLength> out{};
  std::copy(buffer_.begin(), buffer_.end(), out.begin());
  return out;
}

Observation build_observation(double v_av, double position, const SpeedHistory& history,
                              std::optional<LeaderView> leader,
                              const planner::TargetSpeedProfile* profile) {
  const LeaderView lead = leader.value_or(LeaderView{kPhantomSpeed, kPhantomGap});
  Observation obs;
  auto& r = obs.raw;
  r[0] = v_av;
  r[1] = lead.speed;
  r[2] = lead.gap;
  r[3] = failsafe_gap(v_av, lead.speed);
  r[4] = gap_close_gap(v_av);
  const auto hist = history.values();
  std::copy(hist.begin(), hist.end(), r.begin() + kObsHistoryBegin);
  if (profile) {
    const auto targets = profile->query_downstream(position);
    std::copy(targets.begin(), targets.end(), r.begin() + kObsPlannerBegin);
  } else {
    std::fill(r.begin() + kObsPlannerBegin, r.end(), v_av);
  }

  auto& s = obs.scaled;
  s[0] = scale_speed(r[0]);
  s[1] = scale_speed(r[1]);
  for (std::size_t i = 2; i < kObsHistoryBegin; ++i) s[i] = scale_gap(r[i]);
  for (std::size_t i = kObsHistoryBegin; i < kObsSize; ++i) s[i] = scale_speed(r[i]);
  return obs;
}

}  // namespace wavesmooth::control
