#include "wavesmooth/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wavesmooth/error.hpp"
#include "wavesmooth/idm.hpp"
#include "wavesmooth/platoon.hpp"
#include "wavesmooth/policy.hpp"

namespace wavesmooth::sim {

double VehicleTotals::speed_std() const {
  return samples > 1 ? std::sqrt(speed_m2 / static_cast<double>(samples)) : 0.0;
}

std::optional<double> RunMetrics::system_mpg() const {
  std::vector<double> dist;
  std::vector<double> fuel;
  for (const auto& [id, v] : vehicles) {
    if (v.kind == VehicleKind::TrajectoryLeader) continue;
    dist.push_back(v.distance_m);
    fuel.push_back(v.fuel_gal);
  }
  return energy::system_mpg(dist, fuel);
}

double RunMetrics::throughput_vph(std::size_t k) const {
  const auto& c = crossings.at(k);
  if (c.size() < 2 || !(c.back() > c.front())) return 0.0;
  return static_cast<double>(c.size() - 1) / (c.back() - c.front()) * energy::kSecondsPerHour;
}

double RunMetrics::last_follower_speed_std() const {
  const auto it = vehicles.find(last_follower_id);
  return it == vehicles.end() ? 0.0 : it->second.speed_std();
}

std::vector<VehicleKind> make_layout(int platoon_size, double penetration) {
  if (platoon_size < 1) throw ConfigError("platoon_size", "must be >= 1");
  if (!(penetration >= 0.0 && penetration <= 1.0)) {
    throw ConfigError("penetration", "must be in [0, 1]");
  }
  std::vector<VehicleKind> layout{VehicleKind::TrajectoryLeader};
  const long spacing = penetration > 0.0 ? std::lround(1.0 / penetration) : 0;
  for (int i = 1; i <= platoon_size; ++i) {
    const bool av = spacing > 0 && i % spacing == 0;
    layout.push_back(av ? VehicleKind::AV : VehicleKind::Human);
  }
  return layout;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Simulation::Simulation(SimSetup setup, ControllerFactory factory)
    : setup_(std::move(setup)),
      controller_rng_(splitmix64(setup_.seed)),
      lc_rng_(splitmix64(setup_.seed ^ 0x5a5a5a5a5a5a5a5aULL)) {
  validate(setup_.config);
  if (!setup_.trajectory) throw std::invalid_argument("simulation needs a trajectory");
  const auto& traj = *setup_.trajectory;
  if (setup_.start_index + 1 >= traj.length()) {
    throw DataError("trajectory " + traj.id + " is too short for the requested start");
  }
  if (std::abs(traj.dt() - setup_.config.dt) > 1e-9) {
    throw ConfigError("sim.dt", "must equal the trajectory sample spacing");
  }
  if (setup_.layout.empty() || setup_.layout.front() != VehicleKind::TrajectoryLeader) {
    throw ConfigError("sim.platoon", "the first vehicle must be the trajectory leader");
  }
  const long available = static_cast<long>(traj.length() - 1 - setup_.start_index);
  total_steps_ = setup_.steps > 0 ? std::min(setup_.steps, available) : available;

  const auto& cfg = setup_.config;
  vehicles_ = dynamics::make_equilibrium_platoon(setup_.layout, cfg.idm,
                                                 traj.v[setup_.start_index], 0.0);
  next_id_ = static_cast<int>(vehicles_.size());
  leader_positions_ = data::integrate_positions(traj);
  trajectory_offset_ = leader_positions_[setup_.start_index] - vehicles_.front().position;

  for (const auto& v : vehicles_) {
    metrics_.vehicles[v.id] = VehicleTotals{v.id, v.kind};
    if (v.kind == VehicleKind::AV) {
      controllers_[v.id] = factory ? factory(v.id) : std::make_unique<IdmController>();
      histories_.emplace(v.id, control::SpeedHistory(v.speed));
      held_actions_[v.id] = 0.0;
    }
  }
  metrics_.last_follower_id = vehicles_.back().id;
  metrics_.throughput_positions = setup_.throughput_positions;
  metrics_.crossings.resize(setup_.throughput_positions.size());
  if (setup_.planner_enabled && cfg.planner.enabled) {
    feed_ = std::make_unique<planner::FeedService>(traj, cfg.planner, cfg.idm.v0);
  }
  current_profile();
  if (setup_.tsd_stride > 0) record_tsd();
}

int Simulation::index_of(int id) const {
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (vehicles_[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

std::optional<control::LeaderView> Simulation::leader_of(std::size_t index) const {
  if (index == 0) return std::nullopt;
  return control::LeaderView{vehicles_[index - 1].speed, vehicles_[index].gap};
}

double Simulation::trajectory_time() const {
  const auto& traj = *setup_.trajectory;
  return traj.t[setup_.start_index + static_cast<std::size_t>(step_)] - traj.t.front();
}

double Simulation::leader_distance() const {
  return leader_positions_[setup_.start_index + static_cast<std::size_t>(total_steps_)] -
         leader_positions_[setup_.start_index];
}

const planner::TargetSpeedProfile* Simulation::current_profile() {
  if (!feed_) return nullptr;
  profile_ = feed_->profile_at(trajectory_time());
  return profile_.get();
}

control::Observation Simulation::observe(std::size_t index) const {
  const auto& self = vehicles_[index];
  const auto hist = histories_.find(self.id);
  const control::SpeedHistory history =
      hist != histories_.end() ? hist->second : control::SpeedHistory(self.speed);
  return control::build_observation(self.speed, self.position + trajectory_offset_, history,
                                    leader_of(index), profile_.get());
}

void Simulation::record_tsd() {
  const double t = time();
  for (const auto& v : vehicles_) tsd_.push_back({v.id, t, v.position, v.speed});
}

void Simulation::step() {
  if (done()) throw std::logic_error("simulation already finished");
  const auto& cfg = setup_.config;
  const auto& traj = *setup_.trajectory;
  const double dt = cfg.dt;
  const double t = time();
  const auto k = setup_.start_index + static_cast<std::size_t>(step_);

  // (1) leader replay
  const dynamics::LeaderUpdate leader_next{
      vehicles_.front().position + (leader_positions_[k + 1] - leader_positions_[k]),
      traj.v[k + 1]};

  // (2) accelerations from the pre-step snapshot
  const planner::TargetSpeedProfile* profile = current_profile();
  const bool decide_now = at_decision_boundary();
  last_.decisions.clear();
  std::vector<double> accels(vehicles_.size(), 0.0);
  for (std::size_t i = 1; i < vehicles_.size(); ++i) {
    const auto& veh = vehicles_[i];
    const auto& lead = vehicles_[i - 1];
    const double idm = dynamics::idm_command(cfg.idm, veh.speed, lead.speed, veh.gap, cfg.a_lo);
    if (veh.kind != VehicleKind::AV) {
      accels[i] = idm;
      continue;
    }
    auto& ctrl = *controllers_.at(veh.id);
    const auto leader = leader_of(i);
    ctrl.observe(veh, leader, dt);
    if (ctrl.drives_idm()) {
      accels[i] = idm;
      continue;
    }
    const bool gated = setup_.warmup && veh.position < 0.0;
    if (gated) {
      accels[i] = idm;
      continue;
    }
    if (decide_now || !engaged_[veh.id]) {
      engaged_[veh.id] = true;
      const auto obs = control::build_observation(
          veh.speed, veh.position + trajectory_offset_, histories_.at(veh.id), leader, profile);
      const AvContext ctx{veh, leader, obs, profile, veh.position + trajectory_offset_, t};
      held_actions_[veh.id] =
          std::clamp(ctrl.decide(ctx, controller_rng_), control::kActionLow, control::kActionHigh);
    }
    const auto d = control::wrap_action(held_actions_[veh.id], veh.speed, lead.speed, veh.gap, dt);
    accels[i] = d.applied_accel;
    last_.decisions[veh.id] = d;
    ++metrics_.branch_counts[static_cast<std::size_t>(d.branch)];
    if (setup_.record_gap_traces) {
      metrics_.gap_traces[veh.id].push_back({t, veh.gap, d.h_min, d.h_max, d.branch});
    }
  }
  for (auto& [id, hist] : histories_) {
    const int idx = index_of(id);
    if (idx >= 0) hist.push(vehicles_[static_cast<std::size_t>(idx)].speed);
  }

  // (3) lane changes; inserted vehicles get their IDM acceleration at insertion.
  std::vector<VehicleState> pre = vehicles_;
  if (setup_.lc_enabled) {
    std::map<int, double> by_id;
    for (std::size_t i = 0; i < vehicles_.size(); ++i) by_id[vehicles_[i].id] = accels[i];
    const auto events = lanechange::apply_lane_changes(vehicles_, cfg.lane_change, lc_rng_,
                                                       step_, next_id_, &cfg.idm);
    if (!events.empty()) {
      accels.assign(vehicles_.size(), 0.0);
      for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        auto& veh = vehicles_[i];
        const auto it = by_id.find(veh.id);
        if (it != by_id.end()) {
          accels[i] = it->second;
        } else {
          accels[i] = dynamics::idm_command(cfg.idm, veh.speed, vehicles_[i - 1].speed, veh.gap,
                                            cfg.a_lo);
          metrics_.vehicles[veh.id] = VehicleTotals{veh.id, veh.kind};
        }
      }
      metrics_.events.insert(metrics_.events.end(), events.begin(), events.end());
      pre = vehicles_;
    }
  }

  // (4) integration
  vehicles_ = dynamics::step_platoon(pre, accels, dt, leader_next, step_, cfg.v_hi);
  ++step_;

  // (5) metrics
  last_.fuel_rates.assign(vehicles_.size(), 0.0);
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    const auto& v = vehicles_[i];
    const auto& before = pre[i];
    const double rate = energy::fuel_rate(cfg.energy, v.speed, v.accel, &metrics_.energy_clamps);
    last_.fuel_rates[i] = rate;
    auto& tot = metrics_.vehicles[v.id];
    tot.fuel_gal += rate * dt;
    tot.distance_m += v.position - before.position;
    ++tot.samples;
    const double delta = v.speed - tot.speed_mean;
    tot.speed_mean += delta / static_cast<double>(tot.samples);
    tot.speed_m2 += delta * (v.speed - tot.speed_mean);
    metrics_.fuel_stepwise += rate * dt;
    for (std::size_t p = 0; p < setup_.throughput_positions.size(); ++p) {
      const double x = setup_.throughput_positions[p];
      if (before.position < x && v.position >= x) {
        const double frac = (x - before.position) / (v.position - before.position);
        metrics_.crossings[p].push_back(t + frac * dt);
      }
    }
  }
  metrics_.steps = step_;
  if (!done()) current_profile();
  if (setup_.tsd_stride > 0 && step_ % setup_.tsd_stride == 0) record_tsd();
}

void Simulation::run() {
  while (!done()) step();
  for (auto& c : metrics_.crossings) std::sort(c.begin(), c.end());
}

}  // namespace wavesmooth::sim
