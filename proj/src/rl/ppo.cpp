#include "wavesmooth/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "wavesmooth/error.hpp"

namespace wavesmooth::rl {

double reward(std::span<const double> energies, double a_out, double h, double v_av,
              double h_min, double h_max, const RewardCoeffs& c) {
  const double mean_energy =
      energies.empty() ? 0.0
                       : std::accumulate(energies.begin(), energies.end(), 0.0) /
                             static_cast<double>(energies.size());
  double r = -c.c1 * mean_energy - c.c2 * a_out * a_out;
  if (h < h_min || h > h_max) r -= c.c3;
  if (h > 10.0 && v_av > 1.0) r -= c.c4 * h / v_av;
  return r;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const bool> dones, double bootstrap, double gamma,
                      double lambda) {
  const auto n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw std::invalid_argument("compute_gae: rewards, values and dones differ in length");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_value = bootstrap;
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double live = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * live - values[i];
    next_adv = delta + gamma * lambda * live * next_adv;
    out.advantages[i] = next_adv;
    out.returns[i] = next_adv + values[i];
    next_value = values[i];
  }
  return out;
}

double clipped_objective(double ratio, double advantage, double clip_eps) {
  const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

double PolicyGradient::norm() const {
  return std::sqrt(actor.squaredNorm() + value.squaredNorm() + log_std * log_std);
}

void PolicyGradient::scale(double s) {
  actor *= s;
  value *= s;
  log_std *= s;
}

PpoLosses ppo_losses(const control::PolicyParameters& params,
                     std::span<const Transition> batch, const LossOptions& opt,
                     bool with_grad) {
  if (batch.empty()) throw std::invalid_argument("ppo_losses: empty batch");
  static const control::Mlp actor = control::make_actor_net();
  static const control::Mlp value = control::make_value_net();
  const auto n = static_cast<Eigen::Index>(batch.size());
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::MatrixXd obs(static_cast<Eigen::Index>(control::kObsSize), n);
  Eigen::MatrixXd vin(control::kValueInputSize, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = batch[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < control::kObsSize; ++k) obs(static_cast<Eigen::Index>(k), i) = t.obs[k];
    for (int k = 0; k < control::kValueInputSize; ++k) vin(k, i) = t.value_input[static_cast<std::size_t>(k)];
  }

  double adv_mean = 0.0;
  double adv_std = 1.0;
  if (opt.normalize_advantages) {
    for (const auto& t : batch) adv_mean += t.advantage;
    adv_mean *= inv_n;
    double var = 0.0;
    for (const auto& t : batch) var += (t.advantage - adv_mean) * (t.advantage - adv_mean);
    adv_std = std::max(std::sqrt(var * inv_n), 1e-8);
  }

  control::Mlp::Cache actor_cache;
  control::Mlp::Cache value_cache;
  const Eigen::MatrixXd mean = actor.forward(params.actor, obs, with_grad ? &actor_cache : nullptr);
  const Eigen::MatrixXd v = value.forward(params.value, vin, with_grad ? &value_cache : nullptr);

  PpoLosses out;
  const double inv_std = std::exp(-params.log_std);
  Eigen::MatrixXd d_mean(1, n);
  Eigen::MatrixXd d_value(1, n);
  double d_log_std = 0.0;
  long clipped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = batch[static_cast<std::size_t>(i)];
    const double a_hat = (t.advantage - adv_mean) / adv_std;
    const double logp = control::action_log_prob(t.pre_squash, mean(0, i), params.log_std);
    const double ratio = std::exp(logp - t.log_prob);
    if (!std::isfinite(ratio)) throw NumericFault("ppo: non-finite probability ratio", static_cast<long>(i));
    const double unclipped = ratio * a_hat;
    const double obj = clipped_objective(ratio, a_hat, opt.clip_eps);
    out.policy_loss -= obj * inv_n;
    if (std::abs(ratio - 1.0) > opt.clip_eps) ++clipped;
    // The gradient flows only through the unclipped branch when it is the minimum.
    const double d_logp = unclipped <= obj ? -unclipped * inv_n : 0.0;
    const double z = (t.pre_squash - mean(0, i)) * inv_std;
    d_mean(0, i) = d_logp * z * inv_std;
    d_log_std += d_logp * (z * z - 1.0);

    double err = v(0, i) - t.ret;
    double sq = err * err;
    double d_v = 2.0 * err;
    if (opt.clip_value_loss) {
      const double vc = t.value + std::clamp(v(0, i) - t.value, -opt.clip_eps, opt.clip_eps);
      const double errc = vc - t.ret;
      if (errc * errc > sq) {
        sq = errc * errc;
        const bool inside = std::abs(v(0, i) - t.value) < opt.clip_eps;
        d_v = inside ? 2.0 * errc : 0.0;
      }
    }
    out.value_loss += sq * inv_n;
    d_value(0, i) = opt.value_coeff * d_v * inv_n;
  }
  out.entropy = control::gaussian_entropy(params.log_std);
  out.total = out.policy_loss + opt.value_coeff * out.value_loss - opt.entropy_coeff * out.entropy;
  out.clip_fraction = static_cast<double>(clipped) * inv_n;

  if (with_grad) {
    out.grad.actor = Eigen::VectorXd::Zero(params.actor.size());
    out.grad.value = Eigen::VectorXd::Zero(params.value.size());
    actor.backward(params.actor, actor_cache, d_mean, out.grad.actor);
    value.backward(params.value, value_cache, d_value, out.grad.value);
    out.grad.log_std = d_log_std - opt.entropy_coeff;
    if (!out.grad.actor.allFinite() || !out.grad.value.allFinite() ||
        !std::isfinite(out.grad.log_std)) {
      throw NumericFault("ppo: non-finite gradient", -1);
    }
  }
  return out;
}

Eigen::VectorXd flatten(const control::PolicyParameters& p) {
  Eigen::VectorXd flat(p.actor.size() + p.value.size() + 1);
  flat << p.actor, p.value, p.log_std;
  return flat;
}

Eigen::VectorXd flatten(const PolicyGradient& g) {
  Eigen::VectorXd flat(g.actor.size() + g.value.size() + 1);
  flat << g.actor, g.value, g.log_std;
  return flat;
}

void unflatten(const Eigen::VectorXd& flat, control::PolicyParameters& p) {
  const auto na = p.actor.size();
  const auto nv = p.value.size();
  if (flat.size() != na + nv + 1) throw std::invalid_argument("unflatten: size mismatch");
  p.actor = flat.head(na);
  p.value = flat.segment(na, nv);
  p.log_std = flat[na + nv];
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(control::PolicyParameters& params, const PolicyGradient& grad) {
  const Eigen::VectorXd g = flatten(grad);
  if (m_.size() != g.size()) {
    m_ = Eigen::VectorXd::Zero(g.size());
    v_ = Eigen::VectorXd::Zero(g.size());
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * g;
  v_ = beta2_ * v_ + (1.0 - beta2_) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  Eigen::VectorXd flat = flatten(params);
  const Eigen::ArrayXd denom = (v_ / bc2).array().sqrt() + eps_;
  flat.array() -= lr_ * (m_ / bc1).array() / denom;
  unflatten(flat, params);
}

}  // namespace wavesmooth::rl
