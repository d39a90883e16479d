#include "wavesmooth/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wavesmooth/error.hpp"

namespace wavesmooth::data {

namespace {

constexpr double kSpacingTolerance = 1e-6;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string s = trim(text);
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

LoadResult parse_trajectory(const std::string& csv_text, std::string id) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "t,v") {
    throw DataError("trajectory " + id + ": missing 't,v' header");
  }
  LoadResult result;
  result.trajectory.id = std::move(id);
  auto& traj = result.trajectory;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    double t = 0.0;
    double v = 0.0;
    if (comma == std::string::npos || !parse_double(line.substr(0, comma), t) ||
        !parse_double(line.substr(comma + 1), v)) {
      throw DataError("trajectory " + traj.id + ": unparseable row " + std::to_string(row) +
                      ": '" + line + "'");
    }
    if (v < 0.0 || v > kMaxTrajectorySpeed) {
      v = std::clamp(v, 0.0, kMaxTrajectorySpeed);
      ++result.clipped;
    }
    traj.t.push_back(t);
    traj.v.push_back(v);
  }
  validate(traj);
  return result;
}

LoadResult load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trajectory file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto id = path;
  if (const auto slash = id.find_last_of('/'); slash != std::string::npos) id = id.substr(slash + 1);
  if (const auto dot = id.rfind('.'); dot != std::string::npos) id = id.substr(0, dot);
  return parse_trajectory(buffer.str(), id);
}

void save_trajectory(const LeaderTrajectory& trajectory, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trajectory file " + path);
  out << "t,v\n";
  char buf[64];
  for (std::size_t i = 0; i < trajectory.length(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g,%.17g\n", trajectory.t[i], trajectory.v[i]);
    out << buf;
  }
  if (!out) throw DataError("failed writing trajectory file " + path);
}

void validate(const LeaderTrajectory& traj) {
  if (traj.t.size() != traj.v.size()) {
    throw DataError("trajectory " + traj.id + ": time and speed columns differ in length");
  }
  if (traj.length() < 2) {
    throw DataError("trajectory " + traj.id + ": needs at least 2 samples, got " +
                    std::to_string(traj.length()));
  }
  const double dt = traj.t[1] - traj.t[0];
  if (!(dt > 0)) throw DataError("trajectory " + traj.id + ": timestamps must increase");
  for (std::size_t i = 1; i < traj.length(); ++i) {
    const double expected = traj.t[0] + dt * static_cast<double>(i);
    if (std::abs(traj.t[i] - expected) > kSpacingTolerance ||
        std::abs((traj.t[i] - traj.t[i - 1]) - dt) > kSpacingTolerance) {
      throw DataError("trajectory " + traj.id + ": non-uniform spacing at row " +
                      std::to_string(i + 1));
    }
  }
  for (std::size_t i = 0; i < traj.length(); ++i) {
    if (!(traj.v[i] >= 0.0 && traj.v[i] <= kMaxTrajectorySpeed)) {
      throw DataError("trajectory " + traj.id + ": speed out of [0, 40] at row " +
                      std::to_string(i + 1));
    }
  }
}

std::vector<double> integrate_positions(const LeaderTrajectory& traj) {
  std::vector<double> x(traj.length(), 0.0);
  for (std::size_t i = 1; i < traj.length(); ++i) {
    x[i] = x[i - 1] + 0.5 * (traj.v[i - 1] + traj.v[i]) * (traj.t[i] - traj.t[i - 1]);
  }
  return x;
}

std::int64_t make_chunk_id(std::size_t source_index, std::size_t start_index) {
  return static_cast<std::int64_t>(source_index) * 1'000'000 +
         static_cast<std::int64_t>(start_index);
}

TrajectoryChunk sample_chunk(const LeaderTrajectory& traj, std::mt19937_64& rng,
                             std::size_t source_index, std::size_t chunk_length) {
  if (traj.length() < chunk_length) {
    throw DataError("trajectory " + traj.id + " has " + std::to_string(traj.length()) +
                    " samples, chunk needs " + std::to_string(chunk_length));
  }
  std::uniform_int_distribution<std::size_t> start_dist(0, traj.length() - chunk_length);
  const std::size_t start = start_dist(rng);
  TrajectoryChunk chunk;
  chunk.source_id = traj.id;
  chunk.start_index = start;
  chunk.t.assign(traj.t.begin() + static_cast<std::ptrdiff_t>(start),
                 traj.t.begin() + static_cast<std::ptrdiff_t>(start + chunk_length));
  chunk.v.assign(traj.v.begin() + static_cast<std::ptrdiff_t>(start),
                 traj.v.begin() + static_cast<std::ptrdiff_t>(start + chunk_length));
  chunk.chunk_id = make_chunk_id(source_index, start);
  return chunk;
}

namespace {

struct WaveEpisode {
  double start;
  double trough;
  double decel;
  double hold;
  double accel;
};

double episode_speed(const WaveEpisode& w, double v_base, double t) {
  const double depth = v_base - w.trough;
  const double t_down = depth / w.decel;
  const double t_hold_end = t_down + w.hold;
  const double t_up = depth / w.accel;
  const double tau = t - w.start;
  if (tau <= 0) return v_base;
  if (tau < t_down) return v_base - w.decel * tau;
  if (tau <= t_hold_end) return w.trough;
  if (tau < t_hold_end + t_up) return w.trough + w.accel * (tau - t_hold_end);
  return v_base;
}

}  // namespace

LeaderTrajectory generate_synthetic_wave(const WaveSpec& spec, std::mt19937_64& rng,
                                         std::string id) {
  if (!(spec.duration > kSampleDt)) throw DataError("wave spec: duration must exceed one sample");
  if (!(spec.v_base >= 0 && spec.v_base <= 35)) throw DataError("wave spec: v_base must be in [0, 35]");
  if (spec.waves < 0) throw DataError("wave spec: negative wave count");
  if (spec.waves > 0) {
    if (!(spec.v_min >= 0 && spec.v_min < spec.v_base)) {
      throw DataError("wave spec: need 0 <= v_min < v_base");
    }
    if (!(spec.decel > 0 && spec.decel <= kMaxSlew && spec.accel > 0 && spec.accel <= kMaxSlew)) {
      throw DataError("wave spec: rates must be in (0, 3] m/s^2");
    }
    if (spec.hold < 0 || spec.depth_jitter < 0 || spec.depth_jitter > 1) {
      throw DataError("wave spec: hold must be >= 0 and depth_jitter in [0, 1]");
    }
  }

  const std::size_t n = static_cast<std::size_t>(std::llround(spec.duration / kSampleDt));
  std::vector<WaveEpisode> episodes;
  if (spec.waves > 0) {
    const double slot = spec.duration / spec.waves;
    const double depth = spec.v_base - spec.v_min;
    const double worst = depth / spec.decel + 1.5 * spec.hold + depth / (0.8 * spec.accel);
    if (worst > slot) {
      throw DataError("wave spec infeasible: a wave needs up to " + std::to_string(worst) +
                      " s but each slot is " + std::to_string(slot) + " s");
    }
    std::uniform_int_distribution<int> deepest_dist(0, spec.waves - 1);
    const int deepest = deepest_dist(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < spec.waves; ++k) {
      WaveEpisode w{};
      w.trough = k == deepest ? spec.v_min : spec.v_min + unit(rng) * spec.depth_jitter * depth;
      w.decel = spec.decel + unit(rng) * (kMaxSlew - spec.decel);
      w.accel = spec.accel * (0.8 + 0.4 * unit(rng));
      w.accel = std::min(w.accel, kMaxSlew);
      w.hold = spec.hold * (0.5 + unit(rng));
      const double len = (spec.v_base - w.trough) / w.decel + w.hold +
                         (spec.v_base - w.trough) / w.accel;
      w.start = slot * k + unit(rng) * (slot - len);
      episodes.push_back(w);
    }
  }

  LeaderTrajectory traj;
  traj.id = std::move(id);
  traj.t.resize(n);
  traj.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * kSampleDt;
    double v = spec.v_base;
    for (const auto& w : episodes) v = std::min(v, episode_speed(w, spec.v_base, t));
    traj.t[i] = t;
    traj.v[i] = v;
  }
  validate(traj);
  return traj;
}

}  // namespace wavesmooth::data
