#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "wavesmooth/config.hpp"
#include "wavesmooth/observation.hpp"
#include "wavesmooth/policy.hpp"

namespace wavesmooth::rl {

/// r = -c1*mean(E) - c2*a_out^2 - c3*[h outside [h_min, h_max]]
///     - c4*(h/v_av)*[h > 10 and v_av > 1]
double reward(std::span<const double> energies, double a_out, double h, double v_av,
              double h_min, double h_max, const RewardCoeffs& c);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Recursive GAE over one trajectory segment. dones[t] marks a true terminal
/// after step t (next value 0, recursion cut). `bootstrap` is V(s_T) used after
/// the last step when it is not terminal. Throws std::invalid_argument on
/// length mismatch.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const bool> dones, double bootstrap, double gamma,
                      double lambda);

struct Transition {
  std::array<double, control::kObsSize> obs{};
  std::array<double, control::kValueInputSize> value_input{};
  double pre_squash = 0.0;
  double action = 0.0;
  double log_prob = 0.0;  // of the squashed action under the behaviour policy
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
  double advantage = 0.0;
  double ret = 0.0;
};

/// Gradient with the same shape as PolicyParameters.
struct PolicyGradient {
  Eigen::VectorXd actor;
  Eigen::VectorXd value;
  double log_std = 0.0;

  double norm() const;
  void scale(double s);
};

struct LossOptions {
  double clip_eps = 0.2;
  double value_coeff = 0.5;
  double entropy_coeff = 0.0;
  bool clip_value_loss = false;
  bool normalize_advantages = true;
};

struct PpoLosses {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  double clip_fraction = 0.0;
  PolicyGradient grad;  // of `total`
};

/// Clipped surrogate, value MSE and Gaussian entropy on a minibatch, with the
/// exact gradient of total = policy + value_coeff*value - entropy_coeff*entropy.
/// Advantages are normalized over the minibatch (std guarded at 1e-8).
/// Throws NumericFault with the transition index on a non-finite ratio.
PpoLosses ppo_losses(const control::PolicyParameters& params,
                     std::span<const Transition> batch, const LossOptions& opt,
                     bool with_grad = true);

/// Per-sample clipped objective min(rho*A, clip(rho, 1-eps, 1+eps)*A).
double clipped_objective(double ratio, double advantage, double clip_eps);

class Adam {
 public:
  explicit Adam(double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// One update. The gradient is not modified.
  void step(control::PolicyParameters& params, const PolicyGradient& grad);

  long steps() const { return t_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Eigen::VectorXd m_, v_;
};

/// Flattened [actor, value, log_std].
Eigen::VectorXd flatten(const control::PolicyParameters& p);
Eigen::VectorXd flatten(const PolicyGradient& g);
void unflatten(const Eigen::VectorXd& flat, control::PolicyParameters& p);

}  // namespace wavesmooth::rl
