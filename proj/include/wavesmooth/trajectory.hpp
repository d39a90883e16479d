#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace wavesmooth::data {

inline constexpr double kSampleDt = 0.1;
inline constexpr double kMaxTrajectorySpeed = 40.0;

/// Replayed leader speed series at uniform spacing.
struct LeaderTrajectory {
  std::string id;
  std::vector<double> t;
  std::vector<double> v;

  std::size_t length() const { return v.size(); }
  double dt() const { return t.size() > 1 ? t[1] - t[0] : kSampleDt; }
  double duration() const { return t.empty() ? 0.0 : t.back() - t.front(); }
};

struct LoadResult {
  LeaderTrajectory trajectory;
  int clipped = 0;  // samples clipped into [0, 40]
};

/// Reads a `t,v` CSV. Speeds are clipped into [0, 40] and counted.
/// Throws DataError on empty input, bad rows or non-uniform spacing (1e-6 s).
LoadResult load_trajectory(const std::string& path);
LoadResult parse_trajectory(const std::string& csv_text, std::string id);

void save_trajectory(const LeaderTrajectory& trajectory, const std::string& path);

/// Throws DataError unless the trajectory satisfies its invariants.
void validate(const LeaderTrajectory& trajectory);

/// Cumulative distance by the trapezoidal rule; positions[0] = 0.
std::vector<double> integrate_positions(const LeaderTrajectory& trajectory);

struct TrajectoryChunk {
  std::string source_id;
  std::size_t start_index = 0;
  std::vector<double> t;
  std::vector<double> v;
  std::int64_t chunk_id = 0;
};

inline constexpr std::size_t kChunkLength = 500;

/// Injective in (source_index, start_index) for trajectories shorter than 10^6.
std::int64_t make_chunk_id(std::size_t source_index, std::size_t start_index);

/// Uniform start in [0, length - chunk_length]. Throws DataError if too short.
TrajectoryChunk sample_chunk(const LeaderTrajectory& trajectory, std::mt19937_64& rng,
                             std::size_t source_index = 0,
                             std::size_t chunk_length = kChunkLength);

/// Parameters of the synthetic stop-and-go generator. Each wave is a
/// trapezoid: decelerate, hold at the trough, accelerate back to v_base.
struct WaveSpec {
  double duration = 600.0;  // s
  double v_base = 28.0;
  int waves = 5;
  double v_min = 2.0;       // deepest trough
  double decel = 2.0;       // m/s^2, nominal braking rate, jittered up to 3
  double accel = 1.0;       // m/s^2, nominal recovery rate
  double hold = 8.0;        // s at the trough
  double depth_jitter = 0.5;  // shallower troughs reach v_min + jitter*(v_base-v_min) at most
};

inline constexpr double kMaxSlew = 3.0;

/// Throws DataError when a wave cannot fit inside its time slot.
LeaderTrajectory generate_synthetic_wave(const WaveSpec& spec, std::mt19937_64& rng,
                                         std::string id = "synthetic");

/// One committed synthetic trajectory: relative path, generator spec and seed.
struct DatasetEntry {
  std::string path;  // relative to the data directory, e.g. "eval/eval_2.csv"
  WaveSpec spec;
  std::uint64_t seed = 0;
};

/// The committed training (train_1..4) and evaluation (eval_1..6) sets.
/// eval_1 is free flow; eval_2 is the stop-and-go reference trajectory.
std::vector<DatasetEntry> standard_datasets();

/// Regenerates every standard dataset under `data_dir`; returns the paths written.
std::vector<std::string> generate_datasets(const std::string& data_dir);

}  // namespace wavesmooth::data
