#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "wavesmooth/mlp.hpp"
#include "wavesmooth/observation.hpp"

namespace wavesmooth::control {

inline constexpr int kValueInputSize = 20;
inline constexpr int kHiddenWidth = 64;
inline constexpr int kHiddenLayers = 4;

/// Raw actions are squashed into [kActionLow, kActionHigh] by
/// mid + half_range * tanh(u).
inline constexpr double kActionLow = -3.0;
inline constexpr double kActionHigh = 1.5;
inline constexpr double kActionMid = 0.5 * (kActionLow + kActionHigh);
/// Actor output bias at init: squash(kInitialMeanBias) == 0.
inline constexpr double kInitialMeanBias = 0.34657359027997264;  // atanh(1/3)
inline constexpr double kActionHalfRange = 0.5 * (kActionHigh - kActionLow);

Mlp make_actor_net();
Mlp make_value_net();

struct PolicyParameters {
  Eigen::VectorXd actor;
  Eigen::VectorXd value;
  double log_std = 0.0;
  /// Whether the policy was trained with the planner speeds in its input.
  bool planner_obs = true;

  bool operator==(const PolicyParameters& o) const {
    return actor == o.actor && value == o.value && log_std == o.log_std &&
           planner_obs == o.planner_obs;
  }
};

/// Orthogonal init: gain sqrt(2) on hidden layers, 0.01 on the actor head,
/// 1 on the value head; log_std set to `log_std_init`.
PolicyParameters init_policy(std::mt19937_64& rng, double log_std_init = 0.0);

/// Zero weights everywhere (mean 0, action at the interval midpoint).
PolicyParameters zero_policy();

double squash(double u);
/// log |d squash / du|.
double log_squash_jacobian(double u);

/// Log-density of pre-squash u under N(mean, exp(log_std)).
double gaussian_log_prob(double u, double mean, double log_std);

/// Log-density of the squashed action (includes the tanh correction).
double action_log_prob(double u, double mean, double log_std);

/// Entropy of the pre-squash Gaussian.
double gaussian_entropy(double log_std);

enum class ActMode { Stochastic, Deterministic };

struct ActionSample {
  double mean = 0.0;        // actor output
  double pre_squash = 0.0;  // u
  double action = 0.0;      // squash(u), in [-3, 1.5]
  double log_prob = 0.0;    // of the squashed action
};

double actor_mean(const PolicyParameters& params, std::span<const double> scaled_obs);
double value_estimate(const PolicyParameters& params, std::span<const double> value_input);

ActionSample act(const PolicyParameters& params, std::span<const double> scaled_obs,
                 ActMode mode, std::mt19937_64& rng);

/// AVs behave as humans (IDM) at negative positions.
double warmup_gate(double position, double idm_accel, double controller_accel);

}  // namespace wavesmooth::control
