#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "wavesmooth/error.hpp"
#include "wavesmooth/trajectory.hpp"

using namespace wavesmooth;
using namespace wavesmooth::data;

namespace {

std::string csv_of(const std::vector<double>& v, double dt = 0.1) {
  std::ostringstream os;
  os << "t,v\n";
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << i * dt << ',' << v[i] << '\n';
  return os.str();
}

LeaderTrajectory ramp(std::size_t n) {
  LeaderTrajectory t;
  t.id = "ramp";
  for (std::size_t i = 0; i < n; ++i) {
    t.t.push_back(0.1 * static_cast<double>(i));
    t.v.push_back(10.0 + 0.001 * static_cast<double>(i));
  }
  return t;
}

}  // namespace

TEST(Trajectory, LoadsFiveThousandRows) {
  const auto r = parse_trajectory(csv_of(std::vector<double>(5000, 20.0)), "x");
  EXPECT_EQ(r.trajectory.length(), 5000u);
  EXPECT_EQ(r.clipped, 0);
}

TEST(Trajectory, SingleRowRejected) {
  EXPECT_THROW(parse_trajectory("t,v\n0,10\n", "x"), DataError);
  EXPECT_THROW(parse_trajectory("", "x"), DataError);
  EXPECT_THROW(parse_trajectory("t,v\n", "x"), DataError);
}

TEST(Trajectory, NegativeSpeedClipped) {
  const auto r = parse_trajectory(csv_of({10.0, -1.0, 12.0}), "x");
  EXPECT_EQ(r.clipped, 1);
  EXPECT_EQ(r.trajectory.v[1], 0.0);
  EXPECT_EQ(parse_trajectory(csv_of({45.0, 10.0}), "x").trajectory.v[0], 40.0);
}

TEST(Trajectory, BadInputsRejected) {
  EXPECT_THROW(parse_trajectory("t,v\n0,10\n0.1,abc\n", "x"), DataError);
  EXPECT_THROW(parse_trajectory("t,v\n0,10\n0.1,11\n0.25,12\n", "x"), DataError);
  EXPECT_THROW(parse_trajectory("time,speed\n0,10\n0.1,11\n", "x"), DataError);
  EXPECT_THROW(load_trajectory("/nonexistent/traj.csv"), DataError);
}

TEST(Trajectory, PositionsByTrapezoid) {
  const auto r = parse_trajectory(csv_of({0.0, 10.0, 10.0, 20.0}), "x");
  const auto x = integrate_positions(r.trajectory);
  ASSERT_EQ(x.size(), 4u);
  EXPECT_DOUBLE_EQ(x[0], 0.0);
  EXPECT_DOUBLE_EQ(x[1], 0.5);
  EXPECT_DOUBLE_EQ(x[2], 1.5);
  EXPECT_DOUBLE_EQ(x[3], 3.0);
}

TEST(Trajectory, SaveLoadRoundTrip) {
  std::mt19937_64 rng(3);
  const auto traj = generate_synthetic_wave({}, rng, "rt");
  const auto path = (std::filesystem::temp_directory_path() / "wavesmooth_rt.csv").string();
  save_trajectory(traj, path);
  const auto back = load_trajectory(path).trajectory;
  ASSERT_EQ(back.length(), traj.length());
  for (std::size_t i = 0; i < traj.length(); ++i) ASSERT_EQ(back.v[i], traj.v[i]) << i;
  std::filesystem::remove(path);
}

TEST(Chunk, ExactLengthStartsAtZero) {
  const auto traj = ramp(500);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sample_chunk(traj, rng).start_index, 0u);
}

TEST(Chunk, ShortTrajectoryRejected) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(sample_chunk(ramp(499), rng), DataError);
}

TEST(Chunk, DeterministicForSeed) {
  const auto traj = ramp(5000);
  std::mt19937_64 a(42);
  std::mt19937_64 b(42);
  EXPECT_EQ(sample_chunk(traj, a).start_index, sample_chunk(traj, b).start_index);
}

TEST(Chunk, MatchesSourceSlice) {
  const auto traj = ramp(2000);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto c = sample_chunk(traj, rng);
    ASSERT_EQ(c.v.size(), kChunkLength);
    ASSERT_LE(c.start_index + kChunkLength, traj.length());
    ASSERT_TRUE(std::equal(c.v.begin(), c.v.end(), traj.v.begin() + static_cast<long>(c.start_index)));
    ASSERT_TRUE(std::equal(c.t.begin(), c.t.end(), traj.t.begin() + static_cast<long>(c.start_index)));
  }
}

TEST(Chunk, StartIsUniformChiSquare) {
  const auto traj = ramp(1500);
  std::mt19937_64 rng(2024);
  std::vector<int> counts(1001, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts.at(sample_chunk(traj, rng).start_index);
  const double expected = static_cast<double>(draws) / 1001.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // Wilson-Hilferty 99th percentile of chi-square with 1000 degrees of freedom.
  const double k = 1000.0;
  const double crit = k * std::pow(1.0 - 2.0 / (9.0 * k) + 2.326348 * std::sqrt(2.0 / (9.0 * k)), 3);
  EXPECT_LT(chi2, crit);
}

TEST(Chunk, IdsInjective) {
  std::set<std::int64_t> ids;
  for (std::size_t s = 0; s < 10; ++s) {
    for (std::size_t start = 0; start < 2000; ++start) ids.insert(make_chunk_id(s, start));
  }
  EXPECT_EQ(ids.size(), 20000u);
}

TEST(Waves, ZeroWavesIsConstant) {
  WaveSpec spec;
  spec.waves = 0;
  spec.v_base = 28.0;
  spec.duration = 100.0;
  std::mt19937_64 rng(1);
  const auto t = generate_synthetic_wave(spec, rng);
  ASSERT_EQ(t.length(), 1000u);
  for (double v : t.v) ASSERT_EQ(v, 28.0);
}

TEST(Waves, DepthAndCeiling) {
  WaveSpec spec;
  spec.waves = 5;
  spec.v_base = 28.0;
  spec.v_min = 2.0;
  spec.duration = 600.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto t = generate_synthetic_wave(spec, rng);
    const auto [lo, hi] = std::minmax_element(t.v.begin(), t.v.end());
    EXPECT_NEAR(*lo, 2.0, 0.1) << seed;
    EXPECT_LE(*hi, 28.0) << seed;
  }
}

TEST(Waves, SlewBoundAndInvariants) {
  std::mt19937_64 pick(9);
  for (int trial = 0; trial < 50; ++trial) {
    WaveSpec spec;
    spec.duration = std::uniform_real_distribution<double>(300, 900)(pick);
    spec.v_base = std::uniform_real_distribution<double>(15, 32)(pick);
    spec.waves = std::uniform_int_distribution<int>(1, 6)(pick);
    spec.v_min = std::uniform_real_distribution<double>(0, 8)(pick);
    spec.decel = std::uniform_real_distribution<double>(1, 3)(pick);
    std::mt19937_64 rng(static_cast<std::uint64_t>(trial));
    const auto t = generate_synthetic_wave(spec, rng);
    EXPECT_NO_THROW(validate(t));
    EXPECT_NEAR(static_cast<double>(t.length()) * 0.1, spec.duration, 0.1 + 1e-9);
    for (std::size_t i = 1; i < t.length(); ++i) {
      ASSERT_LE(std::abs(t.v[i] - t.v[i - 1]) / 0.1, kMaxSlew + 1e-9) << trial << ' ' << i;
    }
  }
}

TEST(Waves, InfeasibleSpecRejected) {
  WaveSpec spec;
  spec.duration = 60.0;
  spec.waves = 10;
  spec.v_base = 30.0;
  spec.v_min = 0.0;
  std::mt19937_64 rng(1);
  EXPECT_THROW(generate_synthetic_wave(spec, rng), DataError);
}

TEST(Datasets, CommittedFilesMatchGenerator) {
  const std::string root = std::string(WAVESMOOTH_SOURCE_DIR) + "/data/";
  const auto sets = standard_datasets();
  EXPECT_EQ(sets.size(), 10u);
  for (const auto& e : sets) {
    std::mt19937_64 rng(e.seed);
    const auto fresh = generate_synthetic_wave(e.spec, rng, "x");
    const auto file = load_trajectory(root + e.path).trajectory;
    ASSERT_EQ(file.length(), fresh.length()) << e.path;
    for (std::size_t i = 0; i < file.length(); ++i) ASSERT_NEAR(file.v[i], fresh.v[i], 1e-9) << e.path;
  }
}
