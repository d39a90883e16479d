#pragma once

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "wavesmooth/config.hpp"

namespace wavesmooth::lanechange {

/// Per-step cut-in probability in front of an ego with gap h behind a leader at
/// v_lead. Inputs outside the pieces are clamped onto the outer pieces; the
/// result is clamped to [0, 1].
double cut_in_prob(const LcParams& p, double h, double v_lead);

/// Per-step probability that the ego's leader leaves the lane.
double cut_out_prob(const LcParams& p, double v_lead);

enum class EventKind { CutIn, CutOut, Suppressed };

std::string_view to_string(EventKind kind);

struct LaneChangeEvent {
  long step = 0;
  int ego_id = 0;
  EventKind kind = EventKind::CutIn;
  /// Inserted vehicle for cut-ins, removed vehicle for cut-outs, -1 when suppressed.
  int other_id = -1;
  double gap_before = 0.0;  // ego gap before the event
  double gap_after = 0.0;   // ego gap after the event (unchanged when suppressed)
};

/// Applies at most one event per follower, front to rear, on a valid platoon
/// (ordered, gaps set). Cut-outs are drawn first and only remove human
/// vehicles; the trajectory leader never gains a vehicle ahead of it. A cut-in
/// splits the ego's free space (gap - vehicle length) with the inserted
/// vehicle taking fraction r ~ Normal(mu, sigma) clipped to the ratio bounds;
/// it is suppressed if either resulting gap is below min_insert_gap or, when
/// `idm` is given, if the ego's IDM command behind the newcomer is below
/// -max_follower_decel. The new vehicle drives at its new leader's speed and
/// gets id `next_id++`.
std::vector<LaneChangeEvent> apply_lane_changes(std::vector<VehicleState>& states,
                                                const LcParams& p, std::mt19937_64& rng,
                                                long step, int& next_id,
                                                const IdmParams* idm = nullptr);

/// CSV: step,ego_id,event,inserted_id,gap_before,gap_after
void write_event_log(std::ostream& out, const std::vector<LaneChangeEvent>& events,
                     bool header = true);

}  // namespace wavesmooth::lanechange
