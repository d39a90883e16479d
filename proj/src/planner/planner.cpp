#include "wavesmooth/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "wavesmooth/error.hpp"

namespace wavesmooth::planner {

void validate(const SegmentFeed& feed) {
  if (feed.segments.empty()) throw DataError("segment feed is empty");
  if (feed.delay < 0) throw DataError("segment feed delay must be >= 0");
  for (std::size_t i = 0; i < feed.segments.size(); ++i) {
    const auto& s = feed.segments[i];
    if (!(s.end_x > s.start_x)) throw DataError("segment " + std::to_string(i) + " is empty");
    if (!(s.avg_speed >= 0 && s.avg_speed <= data::kMaxTrajectorySpeed)) {
      throw DataError("segment " + std::to_string(i) + " speed out of [0, 40]");
    }
    if (i > 0 && std::abs(s.start_x - feed.segments[i - 1].end_x) > 1e-9) {
      throw DataError("segments " + std::to_string(i - 1) + " and " + std::to_string(i) +
                      " are not contiguous");
    }
  }
}

TargetSpeedProfile::TargetSpeedProfile(double x0, double spacing, std::vector<double> knots,
                                       double valid_from)
    : x0_(x0), spacing_(spacing), knots_(std::move(knots)), valid_from_(valid_from) {
  if (knots_.empty()) throw DataError("target speed profile needs at least one knot");
}

double TargetSpeedProfile::query(double x) const {
  const double u = (x - x0_) / spacing_;
  if (u <= 0.0) return knots_.front();
  const auto last = static_cast<double>(knots_.size() - 1);
  if (u >= last) return knots_.back();
  const auto i = static_cast<std::size_t>(std::floor(u));
  const double frac = u - static_cast<double>(i);
  return knots_[i] + frac * (knots_[i + 1] - knots_[i]);
}

std::array<double, 4> TargetSpeedProfile::query_downstream(double x) const {
  std::array<double, 4> out{};
  for (std::size_t k = 0; k < kDownstreamOffsets.size(); ++k) out[k] = query(x + kDownstreamOffsets[k]);
  return out;
}

std::vector<double> interpolate_midpoints(const SegmentFeed& feed, double x0, double spacing,
                                          std::size_t count) {
  std::vector<double> mx;
  std::vector<double> mv;
  for (const auto& s : feed.segments) {
    mx.push_back(0.5 * (s.start_x + s.end_x));
    mv.push_back(s.avg_speed);
  }
  std::vector<double> out(count);
  std::size_t j = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double x = x0 + spacing * static_cast<double>(i);
    if (x <= mx.front()) {
      out[i] = mv.front();
    } else if (x >= mx.back()) {
      out[i] = mv.back();
    } else {
      while (mx[j + 1] < x) ++j;
      const double frac = (x - mx[j]) / (mx[j + 1] - mx[j]);
      out[i] = mv[j] + frac * (mv[j + 1] - mv[j]);
    }
  }
  return out;
}

std::vector<double> gaussian_smooth(std::span<const double> values, double spacing,
                                    double sigma) {
  const auto half = static_cast<std::ptrdiff_t>(std::floor(4.0 * sigma / spacing));
  std::vector<double> kernel(static_cast<std::size_t>(half + 1));
  for (std::ptrdiff_t k = 0; k <= half; ++k) {
    const double d = static_cast<double>(k) * spacing / sigma;
    kernel[static_cast<std::size_t>(k)] = std::exp(-0.5 * d * d);
  }
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  std::vector<double> out(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double num = 0.0;
    double den = 0.0;
    const auto lo = std::max<std::ptrdiff_t>(0, i - half);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double w = kernel[static_cast<std::size_t>(std::abs(i - j))];
      num += w * values[static_cast<std::size_t>(j)];
      den += w;
    }
    out[static_cast<std::size_t>(i)] = num / den;
  }
  return out;
}

TargetSpeedProfile build_profile(const SegmentFeed& feed, double bandwidth, double spacing) {
  validate(feed);
  if (!(bandwidth > 0)) throw DataError("profile bandwidth must be positive");
  const double x0 = feed.segments.front().start_x;
  const double extent = feed.segments.back().end_x - x0;
  const auto count = static_cast<std::size_t>(std::floor(extent / spacing)) + 1;
  auto raw = interpolate_midpoints(feed, x0, spacing, count);
  return TargetSpeedProfile(x0, spacing, gaussian_smooth(raw, spacing, bandwidth),
                            feed.issued_at);
}

SegmentFeed synth_feed(const data::LeaderTrajectory& traj, std::span<const double> positions,
                       double t, const PlannerParams& params, double v0) {
  if (positions.size() != traj.length()) {
    throw DataError("synth_feed: positions do not match the trajectory");
  }
  const double seg_len = params.segment_length;
  const double interval = params.update_interval;
  const double t0 = traj.t.front();

  SegmentFeed feed;
  feed.delay = params.delay;
  feed.update_interval = interval;
  feed.issued_at = std::floor(t / interval) * interval;

  const double x_end = positions.back();
  const auto n_segments = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(x_end / seg_len - 1e-12)));
  for (std::size_t k = 0; k < n_segments; ++k) {
    feed.segments.push_back({seg_len * static_cast<double>(k),
                             seg_len * static_cast<double>(k + 1), v0});
  }

  const double cutoff = feed.issued_at - params.delay;
  if (cutoff < 0.0) return feed;

  auto segment_of = [&](double x) {
    return std::min(n_segments - 1, static_cast<std::size_t>(std::max(0.0, x) / seg_len));
  };
  // Last sample index (at or before the cutoff) inside each segment.
  std::vector<long> last(n_segments, -1);
  std::size_t newest = 0;
  for (std::size_t i = 0; i < traj.length() && traj.t[i] - t0 <= cutoff + 1e-9; ++i) {
    const auto k = segment_of(positions[i]);
    last[k] = static_cast<long>(i);
    newest = k;
  }
  for (std::size_t k = 0; k < n_segments; ++k) {
    if (last[k] < 0) continue;
    const double t_last = traj.t[static_cast<std::size_t>(last[k])] - t0;
    // Interval (window_end - interval, window_end] containing the last visit.
    const double window_end =
        std::ceil((t_last + params.delay) / interval - 1e-9) * interval - params.delay;
    double sum = 0.0;
    int count = 0;
    for (long i = last[k]; i >= 0; --i) {
      const auto idx = static_cast<std::size_t>(i);
      if (segment_of(positions[idx]) != k) break;
      const double ti = traj.t[idx] - t0;
      if (ti <= window_end - interval + 1e-9) break;
      sum += traj.v[idx];
      ++count;
    }
    feed.segments[k].avg_speed = sum / count;
  }
  const double latest = feed.segments[newest].avg_speed;
  for (std::size_t k = 0; k < n_segments; ++k) {
    if (last[k] < 0) feed.segments[k].avg_speed = latest;
  }
  return feed;
}

std::vector<SegmentFeed> load_feed_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feed file " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("issued_at,start_x,end_x,avg_speed", 0) != 0) {
    throw DataError("feed file " + path + ": missing header");
  }
  std::map<double, SegmentFeed> feeds;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw DataError("feed file " + path + ": bad value on row " + std::to_string(row));
      }
    }
    if (values.size() != 4) {
      throw DataError("feed file " + path + ": expected 4 columns on row " + std::to_string(row));
    }
    auto& feed = feeds[values[0]];
    feed.issued_at = values[0];
    feed.segments.push_back({values[1], values[2], values[3]});
  }
  std::vector<SegmentFeed> out;
  for (auto& [issued, feed] : feeds) {
    validate(feed);
    out.push_back(std::move(feed));
  }
  return out;
}

void write_feed_csv(const std::string& path, const std::vector<SegmentFeed>& feeds) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write feed file " + path);
  out << "issued_at,start_x,end_x,avg_speed\n";
  char buf[128];
  for (const auto& feed : feeds) {
    for (const auto& s : feed.segments) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", feed.issued_at, s.start_x,
                    s.end_x, s.avg_speed);
      out << buf;
    }
  }
}

FeedService::FeedService(const data::LeaderTrajectory& trajectory, PlannerParams params,
                         double v0)
    : trajectory_(&trajectory),
      positions_(data::integrate_positions(trajectory)),
      params_(params),
      v0_(v0) {}

std::shared_ptr<const TargetSpeedProfile> FeedService::profile_at(double t) {
  const double issue = std::floor(t / params_.update_interval) * params_.update_interval;
  if (!current_ || issue != current_issue_) {
    const auto feed = synth_feed(*trajectory_, positions_, t, params_, v0_);
    current_ = std::make_shared<const TargetSpeedProfile>(
        build_profile(feed, params_.bandwidth, params_.knot_spacing));
    current_issue_ = issue;
    ++refreshes_;
  }
  return current_;
}

}  // namespace wavesmooth::planner
