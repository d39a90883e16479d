#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "wavesmooth/checkpoint.hpp"
#include "wavesmooth/error.hpp"
#include "wavesmooth/observation.hpp"
#include "wavesmooth/platoon.hpp"
#include "wavesmooth/policy.hpp"
#include "wavesmooth/wrapper.hpp"

using namespace wavesmooth;
using namespace wavesmooth::control;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Wrapper, WorkedExampleMinimumGap) {
  EXPECT_DOUBLE_EQ(v_diff(30.0, 30.0), 5.0);
  EXPECT_DOUBLE_EQ(failsafe_gap(30.0, 30.0), 30.0);
  EXPECT_DOUBLE_EQ(ttc(25.0, v_diff(30.0, 30.0)), 5.0);
}

TEST(Wrapper, OpeningSpeedHasInfiniteTtc) {
  EXPECT_DOUBLE_EQ(v_diff(0.0, 20.0), -19.0);
  EXPECT_EQ(ttc(10.0, -19.0), kInf);
  EXPECT_EQ(ttc(10.0, 0.0), kInf);
  EXPECT_EQ(failsafe_gap(0.0, 20.0), 0.0);
}

TEST(Wrapper, Branches) {
  auto d = wrap_action(1.2, 30.0, 30.0, 25.0, 0.1);
  EXPECT_EQ(d.branch, Branch::Failsafe);
  EXPECT_EQ(d.a_out, -3.0);

  d = wrap_action(0.0, 0.0, 20.0, 200.0, 0.1);
  EXPECT_EQ(d.branch, Branch::GapClose);
  EXPECT_EQ(d.a_out, 1.5);
  EXPECT_EQ(d.ttc, kInf);

  d = wrap_action(0.3, 30.0, 30.0, 40.0, 0.1);
  EXPECT_EQ(d.branch, Branch::PassThrough);
  EXPECT_EQ(d.a_out, 0.3);
  EXPECT_DOUBLE_EQ(d.ttc, 8.0);
  EXPECT_DOUBLE_EQ(d.h_max, 180.0);
}

TEST(Wrapper, BoundaryTtcIsFailsafe) {
  // ttc exactly 6 s fires the failsafe.
  const auto d = wrap_action(0.0, 30.0, 30.0, 30.0, 0.1);
  EXPECT_EQ(d.branch, Branch::Failsafe);
}

TEST(Wrapper, SpeedBoundsClip) {
  auto d = wrap_action(-3.0, 0.1, 0.1, 50.0, 0.1);
  EXPECT_EQ(d.a_out, -3.0);
  EXPECT_NEAR(d.applied_accel, -1.0, 1e-12);
  d = wrap_action(1.5, 34.95, 35.0, 400.0, 0.1);
  EXPECT_NEAR(d.applied_accel, 0.5, 1e-9);
  EXPECT_GE(gap_close_gap(0.0), 120.0);
}

TEST(Wrapper, CaseTableOnGrid) {
  for (int i = 0; i <= 14; ++i) {
    for (int j = 0; j <= 14; ++j) {
      for (int k = 0; k < 50; ++k) {
        const double va = 2.5 * i, vl = 2.5 * j, h = 1.0 + 5.0 * k;
        const auto d = wrap_action(0.25, va, vl, h, 0.1);
        // h <= 6 v_diff  <=>  10 h <= 60 v_diff, all integers on this grid.
        const long closing60 = 170L * i + 60 - 150L * j;  // 60 * v_diff
        const bool fails = closing60 > 0 && 10L * static_cast<long>(h) <= closing60;
        const Branch expect = fails ? Branch::Failsafe
                              : h >= std::max(120.0, 6.0 * va) ? Branch::GapClose
                                                               : Branch::PassThrough;
        ASSERT_EQ(d.branch, expect) << va << ' ' << vl << ' ' << h;
        ASSERT_EQ(d.branch == Branch::Failsafe, d.ttc <= 6.0);
        if (closing60 > 0) ASSERT_EQ(d.branch == Branch::Failsafe, h <= d.h_min);
        const double v_next = va + d.applied_accel * 0.1;
        ASSERT_GE(v_next, -1e-12);
        ASSERT_LE(v_next, 35.0 + 1e-12);
      }
    }
  }
}

TEST(Wrapper, NoCollisionBehindBrakingLeader) {
  // Leader brakes at -3 from 30 m/s; the AV, no faster than the leader, starts
  // at least 1 m outside the failsafe region and follows an adversarial or
  // random raw action. (An AV faster than a leader braking at -3 can hit it:
  // both then brake equally hard and the AV needs the longer stop.)
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> any(-3.0, 1.5);
  for (double v0 = 0.0; v0 <= 30.0; v0 += 2.5) {
    for (double extra = 1.0; extra <= 60.0; extra += 7.0) {
      for (int policy = 0; policy < 3; ++policy) {
        std::vector<VehicleState> s(2);
        s[0].id = 0;
        s[0].kind = VehicleKind::TrajectoryLeader;
        s[0].speed = 30.0;
        s[1].id = 1;
        s[1].kind = VehicleKind::AV;
        s[1].speed = v0;
        const double gap = failsafe_gap(v0, 30.0) + extra;
        s[1].position = -gap - kVehicleLength;
        dynamics::recompute_gaps(s);
        for (long k = 0; k < 300; ++k) {
          const double raw = policy == 0 ? 1.5 : policy == 1 ? any(rng) : 0.0;
          const auto d = wrap_action(raw, s[1].speed, s[0].speed, s[1].gap, 0.1);
          const double lead_v = std::max(0.0, s[0].speed - 0.3);
          const dynamics::LeaderUpdate lead{s[0].position + lead_v * 0.1, lead_v};
          ASSERT_NO_THROW(s = dynamics::step_platoon(s, std::vector<double>{0.0, d.applied_accel}, 0.1, lead, k))
              << "v0=" << v0 << " extra=" << extra << " policy=" << policy;
        }
      }
    }
  }
}

TEST(Observation, Scaling) {
  EXPECT_DOUBLE_EQ(scale_speed(17.5), 0.0);
  EXPECT_DOUBLE_EQ(scale_speed(0.0), -1.0);
  EXPECT_DOUBLE_EQ(scale_speed(35.0), 1.0);
  EXPECT_DOUBLE_EQ(scale_gap(300.0), 1.0);
  EXPECT_DOUBLE_EQ(scale_gap(125.0), 0.0);
}

TEST(Observation, HistoryPrefill) {
  SpeedHistory h(20.0);
  const auto obs = build_observation(20.0, 10.0, h, LeaderView{20.0, 30.0}, nullptr);
  for (std::size_t i = kObsHistoryBegin; i < kObsHistoryBegin + kHistoryLength; ++i) {
    EXPECT_EQ(obs.raw[i], 20.0);
    EXPECT_EQ(obs.scaled[i], obs.scaled[kObsHistoryBegin]);
  }
  h.push(21.0);
  h.push(22.0);
  const auto v = h.values();
  EXPECT_EQ(v[4], 22.0);
  EXPECT_EQ(v[3], 21.0);
  EXPECT_EQ(v[0], 20.0);
}

TEST(Observation, LayoutAndPhantomLeader) {
  const SpeedHistory h(12.0);
  const auto obs = build_observation(12.0, 0.0, h, std::nullopt, nullptr);
  EXPECT_EQ(obs.raw[1], kPhantomSpeed);
  EXPECT_EQ(obs.raw[2], kPhantomGap);
  EXPECT_EQ(obs.scaled[2], 1.0);
  EXPECT_EQ(obs.raw[3], failsafe_gap(12.0, kPhantomSpeed));
  EXPECT_EQ(obs.raw[4], gap_close_gap(12.0));
  for (std::size_t i = kObsPlannerBegin; i < kObsSize; ++i) EXPECT_EQ(obs.raw[i], 12.0);
}

TEST(Observation, PlannerSlotsQueryDownstream) {
  std::vector<double> knots(400);
  for (std::size_t i = 0; i < knots.size(); ++i) knots[i] = 10.0 + 0.005 * static_cast<double>(i);
  const planner::TargetSpeedProfile prof(0.0, 10.0, knots, 0.0);
  const SpeedHistory h(15.0);
  const auto obs = build_observation(15.0, 1000.0, h, LeaderView{15.0, 40.0}, &prof);
  EXPECT_NEAR(obs.raw[10], prof.query(1000.0), 1e-12);
  EXPECT_NEAR(obs.raw[11], prof.query(1200.0), 1e-12);
  EXPECT_NEAR(obs.raw[12], prof.query(1500.0), 1e-12);
  EXPECT_NEAR(obs.raw[13], prof.query(2000.0), 1e-12);
}

TEST(Observation, ScaledAlwaysInRange) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> v(0.0, 40.0), g(0.1, 1000.0);
  for (int i = 0; i < 2000; ++i) {
    SpeedHistory h(v(rng));
    h.push(v(rng));
    const auto obs = build_observation(v(rng), 0.0, h, LeaderView{v(rng), g(rng)}, nullptr);
    for (double x : obs.scaled) {
      ASSERT_GE(x, -1.0);
      ASSERT_LE(x, 1.0);
    }
  }
}

TEST(Observation, FailsafeZeroWhenOpening) {
  const SpeedHistory h(5.0);
  const auto obs = build_observation(5.0, 0.0, h, LeaderView{25.0, 40.0}, nullptr);
  EXPECT_EQ(obs.raw[3], 0.0);
}

TEST(Policy, ShapesMatchArchitecture) {
  const auto actor = make_actor_net();
  const auto value = make_value_net();
  EXPECT_EQ(actor.sizes(), (std::vector<int>{14, 64, 64, 64, 64, 1}));
  EXPECT_EQ(value.sizes(), (std::vector<int>{20, 64, 64, 64, 64, 1}));
  EXPECT_EQ(actor.num_params(), 14 * 64 + 64 + 3 * (64 * 64 + 64) + 64 + 1);
}

TEST(Policy, ZeroWeightsGiveMidpoint) {
  const auto p = zero_policy();
  std::array<double, kObsSize> obs{};
  obs.fill(0.3);
  std::mt19937_64 rng(1);
  const auto s = act(p, obs, ActMode::Deterministic, rng);
  EXPECT_EQ(s.mean, 0.0);
  EXPECT_DOUBLE_EQ(s.action, -0.75);
}

TEST(Policy, InitialMeanActionIsZero) {
  std::mt19937_64 rng(1);
  const auto p = init_policy(rng);
  EXPECT_NEAR(squash(kInitialMeanBias), 0.0, 1e-15);
  std::array<double, kObsSize> obs{};
  const auto s = act(p, obs, ActMode::Deterministic, rng);
  EXPECT_NEAR(s.action, 0.0, 0.05);
}

TEST(Policy, DeterministicRepeatable) {
  std::mt19937_64 init(5);
  const auto p = init_policy(init);
  std::array<double, kObsSize> obs{};
  for (std::size_t i = 0; i < kObsSize; ++i) obs[i] = 0.1 * static_cast<double>(i) - 0.5;
  std::mt19937_64 a(1), b(99);
  EXPECT_EQ(act(p, obs, ActMode::Deterministic, a).action, act(p, obs, ActMode::Deterministic, b).action);
}

TEST(Policy, VanishingNoiseMatchesDeterministic) {
  std::mt19937_64 init(5);
  auto p = init_policy(init);
  p.log_std = -20.0;
  std::array<double, kObsSize> obs{};
  obs.fill(-0.2);
  std::mt19937_64 rng(3);
  const double det = act(p, obs, ActMode::Deterministic, rng).action;
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(act(p, obs, ActMode::Stochastic, rng).action, det, 1e-6);
}

TEST(Policy, SquashBoundsAndLogProb) {
  EXPECT_DOUBLE_EQ(squash(0.0), -0.75);
  EXPECT_NEAR(squash(50.0), 1.5, 1e-12);
  EXPECT_NEAR(squash(-50.0), -3.0, 1e-12);
  // log|d/du (mid + half tanh u)| = log(half) + log(1 - tanh^2 u), stable at large |u|.
  for (double u : {-30.0, -2.0, 0.0, 0.7, 30.0}) {
    const double t = std::tanh(u);
    if (std::abs(u) < 5) EXPECT_NEAR(log_squash_jacobian(u), std::log(2.25 * (1.0 - t * t)), 1e-12);
    EXPECT_TRUE(std::isfinite(log_squash_jacobian(u)));
  }
  const double lp = gaussian_log_prob(0.4, 0.1, std::log(0.5));
  EXPECT_NEAR(lp, -0.5 * std::pow(0.3 / 0.5, 2) - std::log(0.5) - 0.5 * std::log(2.0 * M_PI), 1e-12);
  EXPECT_NEAR(action_log_prob(0.4, 0.1, std::log(0.5)), lp - log_squash_jacobian(0.4), 1e-12);
  EXPECT_NEAR(gaussian_entropy(0.0), 0.5 * std::log(2.0 * M_PI * M_E), 1e-12);
}

TEST(Policy, StochasticSamplesMatchSpread) {
  auto p = zero_policy();
  p.log_std = std::log(0.3);
  std::array<double, kObsSize> obs{};
  std::mt19937_64 rng(12);
  double s1 = 0.0, s2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto s = act(p, obs, ActMode::Stochastic, rng);
    ASSERT_GE(s.action, -3.0);
    ASSERT_LE(s.action, 1.5);
    s1 += s.pre_squash;
    s2 += s.pre_squash * s.pre_squash;
  }
  EXPECT_NEAR(s1 / n, 0.0, 0.01);
  EXPECT_NEAR(std::sqrt(s2 / n), 0.3, 0.01);
}

TEST(Policy, NonFiniteForwardFaults) {
  auto p = zero_policy();
  const auto net = make_actor_net();
  p.actor[net.bias_offset(2)] = std::nan("");
  std::array<double, kObsSize> obs{};
  std::mt19937_64 rng(1);
  try {
    act(p, obs, ActMode::Deterministic, rng);
    FAIL() << "expected NumericFault";
  } catch (const NumericFault& e) {
    EXPECT_EQ(e.index(), 2);
  }
}

TEST(Policy, WarmupGate) {
  EXPECT_EQ(warmup_gate(-10.0, 0.7, -1.0), 0.7);
  EXPECT_EQ(warmup_gate(0.0, 0.7, -1.0), -1.0);
  EXPECT_EQ(warmup_gate(500.0, 0.7, -1.0), -1.0);
}

TEST(Mlp, OrthogonalColumns) {
  std::mt19937_64 rng(2);
  const auto w = orthogonal(64, 14, std::sqrt(2.0), rng);
  const Eigen::MatrixXd g = w.transpose() * w;
  EXPECT_TRUE(g.isApprox(2.0 * Eigen::MatrixXd::Identity(14, 14), 1e-10));
  const auto wide = orthogonal(1, 64, 0.01, rng);
  EXPECT_NEAR(wide.norm(), 0.01, 1e-12);
}

TEST(Mlp, ForwardMatchesManualComputation) {
  const Mlp net({3, 4, 2});
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  Eigen::VectorXd params(net.num_params());
  for (auto& x : params) x = n(rng);
  Eigen::MatrixXd x(3, 2);
  x << 0.1, -0.2, 0.3, 0.5, -0.7, 0.9;
  const auto y = net.forward(params, x);
  Eigen::Map<const RowMatrix> w0(params.data(), 4, 3);
  Eigen::Map<const Eigen::VectorXd> b0(params.data() + 12, 4);
  Eigen::Map<const RowMatrix> w1(params.data() + 16, 2, 4);
  Eigen::Map<const Eigen::VectorXd> b1(params.data() + 24, 2);
  for (int c = 0; c < 2; ++c) {
    const Eigen::VectorXd hidden = (w0 * x.col(c) + b0).array().tanh().matrix();
    const Eigen::VectorXd out = w1 * hidden + b1;
    EXPECT_NEAR(y(0, c), out(0), 1e-12);
    EXPECT_NEAR(y(1, c), out(1), 1e-12);
  }
}

TEST(Checkpoint, RoundTripBitwise) {
  std::mt19937_64 rng(8);
  auto p = init_policy(rng, -0.37);
  p.planner_obs = false;
  const auto path = temp_path("wavesmooth_ckpt.bin");
  save_checkpoint(p, path);
  const auto back = load_checkpoint(path);
  EXPECT_TRUE(back == p);
  EXPECT_EQ(std::filesystem::file_size(path),
            8u + 4 + 4 + 4 + 6 * 4 + 4 + 6 * 4 + 8 +
                8u * static_cast<std::size_t>(p.actor.size() + p.value.size()));
  std::filesystem::remove(path);
}

TEST(Checkpoint, HeaderBytes) {
  const auto path = temp_path("wavesmooth_hdr.bin");
  save_checkpoint(zero_policy(), path);
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> head(24);
  in.read(reinterpret_cast<char*>(head.data()), 24);
  EXPECT_EQ(std::string(head.begin(), head.begin() + 8), "WSPOLICY");
  EXPECT_EQ(head[8], 1);  // version, little-endian
  EXPECT_EQ(head[12], 1);  // flags: planner_obs
  EXPECT_EQ(head[16], 6);  // actor layer count
  EXPECT_EQ(head[20], 14);  // actor input
  std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptFilesRejected) {
  const auto path = temp_path("wavesmooth_bad.bin");
  save_checkpoint(zero_policy(), path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 8);
  EXPECT_THROW(load_checkpoint(path), DataError);
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTAPOLICYFILE__________";
  }
  EXPECT_THROW(load_checkpoint(path), DataError);
  EXPECT_THROW(load_checkpoint(temp_path("wavesmooth_missing.bin")), DataError);
  std::filesystem::remove(path);
}

TEST(Checkpoint, TextExport) {
  std::mt19937_64 rng(8);
  const auto p = init_policy(rng);
  const auto path = temp_path("wavesmooth_policy.txt");
  export_text(p, path);
  std::ifstream in(path);
  std::string line;
  std::size_t numbers = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ++numbers;
  }
  EXPECT_EQ(numbers, static_cast<std::size_t>(p.actor.size() + p.value.size() + 1));
  std::filesystem::remove(path);
}
