#include "wavesmooth/lane_change.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "wavesmooth/idm.hpp"
#include "wavesmooth/platoon.hpp"

namespace wavesmooth::lanechange {

double cut_in_prob(const LcParams& p, double h, double v_lead) {
  const auto& pieces = p.cut_in;
  h = std::clamp(h, pieces.front().h_lo, pieces.back().h_hi);
  const CutInPiece* piece = &pieces.back();
  for (const auto& candidate : pieces) {
    if (h < candidate.h_hi) {
      piece = &candidate;
      break;
    }
  }
  const auto& c = piece->coeffs;
  const double value =
      c[0] + c[1] * h + c[2] * h * h + c[3] * v_lead + c[4] * v_lead * v_lead + c[5] * h * v_lead;
  return std::clamp(value, 0.0, 1.0);
}

double cut_out_prob(const LcParams& p, double v_lead) {
  const auto& pieces = p.cut_out;
  const double v = std::clamp(v_lead, pieces.front().v_lo, pieces.back().v_hi);
  const CutOutPiece* piece = &pieces.back();
  for (const auto& candidate : pieces) {
    if (v < candidate.v_hi) {
      piece = &candidate;
      break;
    }
  }
  const auto& c = piece->coeffs;
  return std::clamp(c[0] + c[1] * v + c[2] * v * v, 0.0, 1.0);
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::CutIn:
      return "cut_in";
    case EventKind::CutOut:
      return "cut_out";
    case EventKind::Suppressed:
      return "suppressed";
  }
  return "?";
}

std::vector<LaneChangeEvent> apply_lane_changes(std::vector<VehicleState>& states,
                                                const LcParams& p, std::mt19937_64& rng,
                                                long step, int& next_id,
                                                const IdmParams* idm) {
  std::vector<LaneChangeEvent> events;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> ratio_dist(p.gap_ratio_mu, p.gap_ratio_sigma);

  for (std::size_t i = 1; i < states.size(); ++i) {
    const VehicleState& lead = states[i - 1];
    const double gap_before = states[i].gap;

    const double u_out = unit(rng);
    if (lead.kind == VehicleKind::Human && u_out < cut_out_prob(p, lead.speed)) {
      const int removed = lead.id;
      states.erase(states.begin() + static_cast<std::ptrdiff_t>(i - 1));
      --i;
      dynamics::recompute_gaps(states);
      events.push_back({step, states[i].id, EventKind::CutOut, removed, gap_before,
                        states[i].gap});
      continue;
    }

    const double u_in = unit(rng);
    if (u_in >= cut_in_prob(p, gap_before, lead.speed)) continue;

    const double ratio = std::clamp(ratio_dist(rng), p.ratio_lo, p.ratio_hi);
    const double free_space = gap_before - kVehicleLength;
    const double inserted_gap = ratio * free_space;
    const double ego_gap = free_space - inserted_gap;
    const bool unsafe = idm && p.max_follower_decel > 0.0 &&
                        dynamics::idm_accel(*idm, states[i].speed, lead.speed, ego_gap) <
                            -p.max_follower_decel;
    if (inserted_gap < p.min_insert_gap || ego_gap < p.min_insert_gap || unsafe) {
      events.push_back({step, states[i].id, EventKind::Suppressed, -1, gap_before, gap_before});
      continue;
    }
    VehicleState inserted;
    inserted.id = next_id++;
    inserted.kind = VehicleKind::Human;
    inserted.position = lead.position - lead.length - inserted_gap;
    inserted.speed = lead.speed;
    inserted.accel = 0.0;
    states.insert(states.begin() + static_cast<std::ptrdiff_t>(i), inserted);
    dynamics::recompute_gaps(states);
    ++i;  // the ego moved one slot back; the newcomer gets no event this step
    events.push_back({step, states[i].id, EventKind::CutIn, inserted.id, gap_before,
                      states[i].gap});
  }
  return events;
}

void write_event_log(std::ostream& out, const std::vector<LaneChangeEvent>& events,
                     bool header) {
  if (header) out << "step,ego_id,event,inserted_id,gap_before,gap_after\n";
  char buf[160];
  for (const auto& e : events) {
    std::snprintf(buf, sizeof buf, "%ld,%d,%s,%d,%.6f,%.6f\n", e.step, e.ego_id,
                  std::string(to_string(e.kind)).c_str(), e.other_id, e.gap_before,
                  e.gap_after);
    out << buf;
  }
}

}  // namespace wavesmooth::lanechange
