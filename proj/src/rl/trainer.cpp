#include "wavesmooth/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "wavesmooth/checkpoint.hpp"
#include "wavesmooth/error.hpp"

namespace wavesmooth::rl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double to_unit(double x, double scale) { return std::clamp(2.0 * x / scale - 1.0, -1.0, 1.0); }

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ b);
}

double hash_chunk_id(std::int64_t chunk_id) {
  const auto h = splitmix64(static_cast<std::uint64_t>(chunk_id));
  return 2.0 * static_cast<double>(h >> 11) / 9007199254740992.0 - 1.0;
}

std::array<double, control::kValueInputSize> augment(
    const std::array<double, control::kObsSize>& scaled_obs, const ValueExtras& e) {
  std::array<double, control::kValueInputSize> out{};
  std::copy(scaled_obs.begin(), scaled_obs.end(), out.begin());
  auto* x = out.data() + control::kObsSize;
  x[0] = to_unit(e.miles, kMilesScale);
  x[1] = to_unit(e.gallons, kGallonsScale);
  x[2] = to_unit(std::min<double>(e.horizon, kHorizonScale), kHorizonScale);
  x[3] = hash_chunk_id(e.chunk_id);
  x[4] = std::clamp(2.0 * e.progress_space - 1.0, -1.0, 1.0);
  x[5] = std::clamp(2.0 * e.progress_time - 1.0, -1.0, 1.0);
  return out;
}

TrainingEnv::TrainingEnv(SimConfig config,
                         std::vector<std::shared_ptr<const data::LeaderTrajectory>> trajectories,
                         bool planner_obs)
    : config_(std::move(config)), trajectories_(std::move(trajectories)), planner_obs_(planner_obs) {
  if (trajectories_.empty()) throw DataError("training needs at least one trajectory");
  const auto& layout = config_.platoon_layout;
  if (std::count(layout.begin(), layout.end(), VehicleKind::AV) != 1) {
    throw ConfigError("sim.platoon", "the training platoon must contain exactly one AV");
  }
  const auto needed = static_cast<std::size_t>(config_.horizon_sim_steps()) + 1;
  for (const auto& t : trajectories_) {
    if (t->length() < needed) {
      throw DataError("training trajectory " + t->id + " is shorter than one episode");
    }
  }
}

void TrainingEnv::reset(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, trajectories_.size() - 1);
  const auto which = pick(rng);
  const auto& traj = trajectories_[which];
  const auto span = static_cast<std::size_t>(config_.horizon_sim_steps());
  std::uniform_int_distribution<std::size_t> start_dist(0, traj->length() - 1 - span);
  const auto start = start_dist(rng);
  chunk_id_ = data::make_chunk_id(which, start);

  sim::SimSetup setup;
  setup.config = config_;
  setup.trajectory = traj;
  setup.start_index = start;
  setup.steps = static_cast<long>(span);
  setup.layout = config_.platoon_layout;
  setup.lc_enabled = false;
  setup.planner_enabled = planner_obs_;
  setup.warmup = true;
  setup.seed = rng();
  external_ = nullptr;
  sim_ = std::make_unique<sim::Simulation>(std::move(setup), [this](int) {
    auto c = std::make_unique<sim::ExternalController>();
    external_ = c.get();
    return c;
  });
  av_id_ = -1;
  for (const auto& v : sim_->vehicles()) {
    if (v.kind == VehicleKind::AV) av_id_ = v.id;
  }
  decisions_ = 0;
  chunk_distance_ = std::max(1.0, sim_->leader_distance());
}

std::array<double, control::kObsSize> TrainingEnv::observation() const {
  const int idx = sim_->index_of(av_id_);
  return sim_->observe(static_cast<std::size_t>(idx)).scaled;
}

std::array<double, control::kValueInputSize> TrainingEnv::value_input() const {
  const auto& tot = sim_->metrics().vehicles.at(av_id_);
  ValueExtras e;
  e.miles = tot.distance_m / energy::kMetersPerMile;
  e.gallons = tot.fuel_gal;
  e.horizon = config_.horizon_env_steps;
  e.chunk_id = chunk_id_;
  e.progress_space = tot.distance_m / chunk_distance_;
  e.progress_time = static_cast<double>(decisions_) / config_.horizon_env_steps;
  return augment(observation(), e);
}

EnvStep TrainingEnv::step(double raw_action) {
  if (!sim_) throw std::logic_error("TrainingEnv::step before reset");
  external_->set_action(raw_action);
  const auto n = static_cast<std::size_t>(std::max(1, config_.reward.platoon_size_n));
  std::vector<double> energies;  // per platoon vehicle, gal/h, window average
  double a_sq = 0.0;
  int steps = 0;
  for (int k = 0; k < config_.action_repeat && !sim_->done(); ++k) {
    sim_->step();
    const auto& info = sim_->last_step();
    const auto idx = static_cast<std::size_t>(sim_->index_of(av_id_));
    const auto end = std::min(info.fuel_rates.size(), idx + n);
    energies.resize(end - idx, 0.0);
    for (auto i = idx; i < end; ++i) energies[i - idx] += info.fuel_rates[i] * energy::kSecondsPerHour;
    const auto d = info.decisions.find(av_id_);
    const double a_out = d != info.decisions.end() ? d->second.a_out : 0.0;
    a_sq += a_out * a_out;
    ++steps;
  }
  ++decisions_;
  EnvStep out;
  for (auto& e : energies) e /= std::max(1, steps);
  out.mean_energy = energies.empty() ? 0.0
                                     : std::accumulate(energies.begin(), energies.end(), 0.0) /
                                           static_cast<double>(energies.size());
  out.a_out_rms = std::sqrt(a_sq / std::max(1, steps));
  const auto idx = static_cast<std::size_t>(sim_->index_of(av_id_));
  const auto& av = sim_->vehicles()[idx];
  const auto& lead = sim_->vehicles()[idx - 1];
  const double h_min = control::failsafe_gap(av.speed, lead.speed);
  const double h_max = control::gap_close_gap(av.speed);
  out.reward = reward(energies, out.a_out_rms, av.gap, av.speed, h_min,
                      h_max, config_.reward);
  out.truncated = decisions_ >= config_.horizon_env_steps || sim_->done();
  return out;
}

std::vector<Transition> collect_episode(TrainingEnv& env, const control::PolicyParameters& params,
                                        const TrainConfig& tc, std::mt19937_64& rng,
                                        double* episode_reward) {
  env.reset(rng);
  std::vector<Transition> ep;
  double total = 0.0;
  for (;;) {
    Transition t;
    t.obs = env.observation();
    t.value_input = env.value_input();
    const auto s = control::act(params, t.obs, control::ActMode::Stochastic, rng);
    t.pre_squash = s.pre_squash;
    t.action = s.action;
    t.log_prob = s.log_prob;
    t.value = control::value_estimate(params, t.value_input);
    const auto r = env.step(s.action);
    t.reward = r.reward;
    total += r.reward;
    ep.push_back(t);
    if (r.truncated) break;
  }
  const double bootstrap = control::value_estimate(params, env.value_input());
  std::vector<double> rewards;
  std::vector<double> values;
  for (const auto& t : ep) {
    rewards.push_back(t.reward);
    values.push_back(t.value);
  }
  std::unique_ptr<bool[]> dones(new bool[ep.size()]());
  const auto gae = compute_gae(rewards, values, std::span<const bool>(dones.get(), ep.size()),
                               bootstrap, tc.gamma, tc.gae_lambda);
  for (std::size_t i = 0; i < ep.size(); ++i) {
    ep[i].advantage = gae.advantages[i];
    ep[i].ret = gae.returns[i];
  }
  if (episode_reward) *episode_reward = total;
  return ep;
}

std::string format_log_row(const IterationLog& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.3f", r.iter, r.mean_ep_reward,
                r.policy_loss, r.value_loss, r.entropy, r.grad_norm, r.wall_s);
  return buf;
}

TrainResult train(const TrainOptions& options,
                  const std::vector<std::shared_ptr<const data::LeaderTrajectory>>& trajectories) {
  const auto& cfg = options.config;
  const auto& tc = cfg.train;
  validate(cfg);
  const int iterations = options.iterations > 0 ? options.iterations : tc.iterations;
  const int horizon = cfg.horizon_env_steps;
  const int episodes = std::max(1, (tc.batch_size + horizon - 1) / horizon);
  const int jobs = options.strict_deterministic ? 1 : std::max(1, options.jobs);

  std::mt19937_64 init_rng(derive_seed(options.seed, 0x1417));
  TrainResult result;
  result.params = control::init_policy(init_rng, tc.log_std_init);
  result.params.planner_obs = options.planner_obs;
  Adam adam(tc.lr);
  LossOptions lo;
  lo.clip_eps = tc.clip_eps;
  lo.value_coeff = tc.value_coeff;
  lo.entropy_coeff = tc.entropy_coeff;
  lo.clip_value_loss = tc.clip_value_loss;

  std::ofstream log_file;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    log_file.open(options.out_dir + "/train_log.csv");
    if (!log_file) throw DataError("cannot write " + options.out_dir + "/train_log.csv");
    log_file << kTrainLogHeader << '\n';
  }

  std::vector<TrainingEnv> envs;
  for (int j = 0; j < jobs; ++j) envs.emplace_back(cfg, trajectories, options.planner_obs);

  const auto t0 = std::chrono::steady_clock::now();
  for (int iter = 1; iter <= iterations; ++iter) {
    std::vector<std::vector<Transition>> eps(static_cast<std::size_t>(episodes));
    std::vector<double> ep_rewards(static_cast<std::size_t>(episodes), 0.0);
    auto collect = [&](int worker) {
      for (int e = worker; e < episodes; e += jobs) {
        std::mt19937_64 rng(derive_seed(options.seed, static_cast<std::uint64_t>(iter),
                                        static_cast<std::uint64_t>(e) + 1));
        auto& slot = eps[static_cast<std::size_t>(e)];
        try {
          slot = collect_episode(envs[static_cast<std::size_t>(worker)], result.params, tc, rng,
                                 &ep_rewards[static_cast<std::size_t>(e)]);
        } catch (const CollisionFault& f) {
          throw Error(std::string("rollout iter ") + std::to_string(iter) + " episode " +
                      std::to_string(e) + ": " + f.what());
        }
      }
    };
    if (jobs == 1) {
      collect(0);
    } else {
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
      std::vector<std::thread> pool;
      for (int j = 0; j < jobs; ++j) {
        pool.emplace_back([&, j] {
          try {
            collect(j);
          } catch (...) {
            errors[static_cast<std::size_t>(j)] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (auto& err : errors) {
        if (err) std::rethrow_exception(err);
      }
    }

    std::vector<Transition> batch;
    for (auto& ep : eps) batch.insert(batch.end(), ep.begin(), ep.end());

    IterationLog row;
    row.iter = iter;
    row.episodes = episodes;
    row.transitions = static_cast<int>(batch.size());
    row.mean_ep_reward = std::accumulate(ep_rewards.begin(), ep_rewards.end(), 0.0) / episodes;

    std::mt19937_64 shuffle_rng(derive_seed(options.seed, static_cast<std::uint64_t>(iter), 0xb47c));
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), 0);
    const auto mb = static_cast<std::size_t>(std::max(1, tc.minibatch_size));
    int updates = 0;
    for (int epoch = 0; epoch < tc.epochs_per_iter; ++epoch) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      for (std::size_t begin = 0; begin < order.size(); begin += mb) {
        const auto end = std::min(order.size(), begin + mb);
        std::vector<Transition> minibatch;
        for (auto k = begin; k < end; ++k) minibatch.push_back(batch[order[k]]);
        auto losses = ppo_losses(result.params, minibatch, lo);
        const double norm = losses.grad.norm();
        if (tc.max_grad_norm > 0 && norm > tc.max_grad_norm) losses.grad.scale(tc.max_grad_norm / norm);
        adam.step(result.params, losses.grad);
        row.policy_loss += losses.policy_loss;
        row.value_loss += losses.value_loss;
        row.entropy += losses.entropy;
        row.grad_norm += norm;
        ++updates;
      }
    }
    if (updates > 0) {
      row.policy_loss /= updates;
      row.value_loss /= updates;
      row.entropy /= updates;
      row.grad_norm /= updates;
    }
    row.wall_s = options.strict_deterministic
                     ? 0.0
                     : std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(row);
    if (log_file.is_open()) {
      log_file << format_log_row(row) << '\n';
      log_file.flush();
    }
    if (!options.out_dir.empty() && tc.checkpoint_every > 0 && iter % tc.checkpoint_every == 0) {
      control::save_checkpoint(result.params,
                               options.out_dir + "/checkpoint_" + std::to_string(iter) + ".bin");
    }
    if (options.on_iteration) options.on_iteration(row);
  }
  if (!options.out_dir.empty()) {
    control::save_checkpoint(result.params, options.out_dir + "/policy.bin");
    control::export_text(result.params, options.out_dir + "/policy.txt");
  }
  return result;
}

}  // namespace wavesmooth::rl
