#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "wavesmooth/config.hpp"
#include "wavesmooth/controllers.hpp"
#include "wavesmooth/policy.hpp"
#include "wavesmooth/ppo.hpp"
#include "wavesmooth/simulation.hpp"
#include "wavesmooth/trajectory.hpp"

namespace wavesmooth::rl {

/// Scale limits for the extra value-network inputs.
inline constexpr double kMilesScale = 5.0;
inline constexpr double kGallonsScale = 1.0;
inline constexpr double kHorizonScale = 1000.0;

/// Maps a chunk id to [-1, 1] through splitmix64.
double hash_chunk_id(std::int64_t chunk_id);

struct ValueExtras {
  double miles = 0.0;           // AV cumulative
  double gallons = 0.0;         // AV cumulative
  int horizon = 0;              // decisions per episode
  std::int64_t chunk_id = 0;
  double progress_space = 0.0;  // [0, 1]
  double progress_time = 0.0;   // [0, 1]
};

/// 14 scaled observation scalars followed by the six scaled extras.
std::array<double, control::kValueInputSize> augment(
    const std::array<double, control::kObsSize>& scaled_obs, const ValueExtras& extras);

struct EnvStep {
  double reward = 0.0;
  double a_out_rms = 0.0;
  double mean_energy = 0.0;  // gal/h, averaged over the window and platoon
  bool truncated = false;
};

/// Single-AV training environment on chunks of the training trajectories.
/// One action spans action_repeat simulation steps; the reward uses window
/// averages of the platoon fuel rates (in gal/h) and the RMS of a_out.
class TrainingEnv {
 public:
  TrainingEnv(SimConfig config, std::vector<std::shared_ptr<const data::LeaderTrajectory>> trajectories,
              bool planner_obs = true);

  void reset(std::mt19937_64& rng);
  EnvStep step(double raw_action);

  std::array<double, control::kObsSize> observation() const;
  std::array<double, control::kValueInputSize> value_input() const;
  int decisions() const { return decisions_; }
  int horizon() const { return config_.horizon_env_steps; }
  const sim::Simulation& simulation() const { return *sim_; }

 private:
  SimConfig config_;
  std::vector<std::shared_ptr<const data::LeaderTrajectory>> trajectories_;
  bool planner_obs_;
  std::unique_ptr<sim::Simulation> sim_;
  sim::ExternalController* external_ = nullptr;
  int av_id_ = -1;
  int decisions_ = 0;
  std::int64_t chunk_id_ = 0;
  double chunk_distance_ = 1.0;
};

struct IterationLog {
  int iter = 0;
  double mean_ep_reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;
  double wall_s = 0.0;
  int episodes = 0;
  int transitions = 0;
};

struct TrainOptions {
  SimConfig config;
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: nothing is written
  bool strict_deterministic = false;
  bool planner_obs = true;
  int jobs = 1;
  /// Overrides config.train.iterations when > 0.
  int iterations = 0;
  std::function<void(const IterationLog&)> on_iteration;
};

struct TrainResult {
  control::PolicyParameters params;
  std::vector<IterationLog> log;
};

/// Collects one episode with the stochastic policy; GAE is filled in.
std::vector<Transition> collect_episode(TrainingEnv& env, const control::PolicyParameters& params,
                                        const TrainConfig& tc, std::mt19937_64& rng,
                                        double* episode_reward);

/// PPO training. Writes `train_log.csv`, periodic `checkpoint_<iter>.bin`,
/// `policy.bin` and `policy.txt` under out_dir. With strict_deterministic the
/// collection runs on one thread and wall_s is logged as 0.
TrainResult train(const TrainOptions& options,
                  const std::vector<std::shared_ptr<const data::LeaderTrajectory>>& trajectories);

/// `iter,mean_ep_reward,policy_loss,value_loss,entropy,grad_norm,wall_s`
std::string format_log_row(const IterationLog& row);
inline constexpr const char* kTrainLogHeader =
    "iter,mean_ep_reward,policy_loss,value_loss,entropy,grad_norm,wall_s";

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace wavesmooth::rl
