#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wavesmooth/config.hpp"
#include "wavesmooth/trajectory.hpp"

namespace wavesmooth::planner {

struct Segment {
  double start_x = 0.0;
  double end_x = 0.0;
  double avg_speed = 0.0;
};

/// Coarse segment-average speeds as issued by a traffic data feed.
struct SegmentFeed {
  std::vector<Segment> segments;
  double issued_at = 0.0;
  double delay = 180.0;
  double update_interval = 60.0;
};

/// Throws DataError if segments are empty, unordered, non-contiguous or out of [0, 40].
void validate(const SegmentFeed& feed);

/// Offsets of the downstream queries fed to the controller, m.
inline constexpr std::array<double, 4> kDownstreamOffsets{0.0, 200.0, 500.0, 1000.0};

/// Position-indexed target speed on a uniform knot grid.
class TargetSpeedProfile {
 public:
  TargetSpeedProfile() = default;
  TargetSpeedProfile(double x0, double spacing, std::vector<double> knots, double valid_from);

  /// Linear interpolation between knots, constant beyond the ends.
  double query(double x) const;
  std::array<double, 4> query_downstream(double x) const;

  double x0() const { return x0_; }
  double spacing() const { return spacing_; }
  double valid_from() const { return valid_from_; }
  const std::vector<double>& knots() const { return knots_; }

 private:
  double x0_ = 0.0;
  double spacing_ = 10.0;
  std::vector<double> knots_{0.0};
  double valid_from_ = 0.0;
};

/// Piecewise-linear interpolation through the segment midpoints, sampled at
/// x0 + i*spacing; constant beyond the outermost midpoints.
std::vector<double> interpolate_midpoints(const SegmentFeed& feed, double x0, double spacing,
                                          std::size_t count);

/// Discrete Gaussian smoothing (sigma in metres) truncated at 4 sigma and
/// renormalized over the in-grid part of the kernel.
std::vector<double> gaussian_smooth(std::span<const double> values, double spacing,
                                    double sigma);

/// Interpolate, then smooth. The knot grid spans the feed's extent.
TargetSpeedProfile build_profile(const SegmentFeed& feed, double bandwidth,
                                 double spacing = 10.0);

/// Synthetic feed from a leader trajectory (positions integrated from it,
/// both indexed from the trajectory start). Space is cut into segments of
/// params.segment_length. The feed issued at time t (rounded down to the
/// update interval) averages the leader speed per segment over the interval
/// ending at issued_at - delay; segments visited earlier keep the average of
/// their last visited interval, unvisited ones carry the most recent value,
/// and before any data exists every segment reports v0.
SegmentFeed synth_feed(const data::LeaderTrajectory& trajectory,
                       std::span<const double> positions, double t,
                       const PlannerParams& params, double v0 = 35.0);

/// Rows `issued_at,start_x,end_x,avg_speed`; one feed per distinct issued_at.
std::vector<SegmentFeed> load_feed_csv(const std::string& path);
void write_feed_csv(const std::string& path, const std::vector<SegmentFeed>& feeds);

/// Owns the clock of a synthetic feed for one simulation: hands out immutable
/// profile snapshots that only change at update-interval boundaries.
class FeedService {
 public:
  FeedService(const data::LeaderTrajectory& trajectory, PlannerParams params, double v0);

  /// Profile valid at trajectory time t (seconds since the trajectory start).
  std::shared_ptr<const TargetSpeedProfile> profile_at(double t);

  /// Number of profile rebuilds so far.
  int refreshes() const { return refreshes_; }

 private:
  const data::LeaderTrajectory* trajectory_;
  std::vector<double> positions_;
  PlannerParams params_;
  double v0_;
  double current_issue_ = -1.0;
  std::shared_ptr<const TargetSpeedProfile> current_;
  int refreshes_ = 0;
};

}  // namespace wavesmooth::planner
