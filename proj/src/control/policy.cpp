#include "wavesmooth/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace wavesmooth::control {

namespace {

std::vector<int> hidden_sizes(int input) {
  std::vector<int> sizes{input};
  for (int i = 0; i < kHiddenLayers; ++i) sizes.push_back(kHiddenWidth);
  sizes.push_back(1);
  return sizes;
}

const Mlp& actor_net() {
  static const Mlp net = make_actor_net();
  return net;
}

const Mlp& value_net() {
  static const Mlp net = make_value_net();
  return net;
}

double scalar_forward(const Mlp& net, const Eigen::VectorXd& params, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.input_size()) {
    throw std::invalid_argument("network input has the wrong size");
  }
  const Eigen::Map<const Eigen::VectorXd> input(x.data(), static_cast<Eigen::Index>(x.size()));
  return net.forward(params, input)(0, 0);
}

}  // namespace

Mlp make_actor_net() { return Mlp(hidden_sizes(static_cast<int>(kObsSize)), "actor"); }
Mlp make_value_net() { return Mlp(hidden_sizes(kValueInputSize), "value"); }

PolicyParameters init_policy(std::mt19937_64& rng, double log_std_init) {
  PolicyParameters p;
  const Mlp& actor = actor_net();
  p.actor = actor.init_params(rng, std::sqrt(2.0), 0.01);
  // Start near zero acceleration rather than at the middle of the asymmetric range.
  p.actor[actor.bias_offset(actor.layers() - 1)] = kInitialMeanBias;
  p.value = value_net().init_params(rng, std::sqrt(2.0), 1.0);
  p.log_std = log_std_init;
  return p;
}

PolicyParameters zero_policy() {
  PolicyParameters p;
  p.actor = Eigen::VectorXd::Zero(actor_net().num_params());
  p.value = Eigen::VectorXd::Zero(value_net().num_params());
  return p;
}

double squash(double u) { return kActionMid + kActionHalfRange * std::tanh(u); }

double log_squash_jacobian(double u) {
  // log(1 - tanh(u)^2) = 2*(log 2 - u - softplus(-2u)), stable for large |u|.
  const double softplus = std::max(-2.0 * u, 0.0) + std::log1p(std::exp(-std::abs(2.0 * u)));
  return std::log(kActionHalfRange) + 2.0 * (std::numbers::ln2 - u - softplus);
}

double gaussian_log_prob(double u, double mean, double log_std) {
  const double z = (u - mean) * std::exp(-log_std);
  return -0.5 * z * z - log_std - 0.5 * std::log(2.0 * std::numbers::pi);
}

double action_log_prob(double u, double mean, double log_std) {
  return gaussian_log_prob(u, mean, log_std) - log_squash_jacobian(u);
}

double gaussian_entropy(double log_std) {
  return 0.5 + 0.5 * std::log(2.0 * std::numbers::pi) + log_std;
}

double actor_mean(const PolicyParameters& params, std::span<const double> scaled_obs) {
  return scalar_forward(actor_net(), params.actor, scaled_obs);
}

double value_estimate(const PolicyParameters& params, std::span<const double> value_input) {
  return scalar_forward(value_net(), params.value, value_input);
}

ActionSample act(const PolicyParameters& params, std::span<const double> scaled_obs,
                 ActMode mode, std::mt19937_64& rng) {
  ActionSample s;
  s.mean = actor_mean(params, scaled_obs);
  s.pre_squash = s.mean;
  if (mode == ActMode::Stochastic) {
    std::normal_distribution<double> normal(0.0, 1.0);
    s.pre_squash = s.mean + std::exp(params.log_std) * normal(rng);
  }
  s.action = squash(s.pre_squash);
  s.log_prob = action_log_prob(s.pre_squash, s.mean, params.log_std);
  return s;
}

double warmup_gate(double position, double idm_accel, double controller_accel) {
  return position < 0.0 ? idm_accel : controller_accel;
}

}  // namespace wavesmooth::control
