#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ccfdm/nets.hpp"
#include "ccfdm/ops.hpp"

namespace ccfdm {

// One standard normal via Box-Muller, consuming exactly two uniform draws.
// No distribution object state survives between calls, which keeps RNG
// checkpointing down to the engine state alone.
inline double normal_draw(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u1 = unit(rng);
  double u2 = unit(rng);
  if (u1 <= 0.0) u1 = std::numeric_limits<double>::min();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi_v<double> * u2);
}

template <class T>
TensorT<T> normal_tensor(std::vector<std::int64_t> shape, std::mt19937_64& rng) {
  auto t = TensorT<T>::zeros(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(normal_draw(rng));
  return t;
}

template <class T>
struct ActionSample {
  Var action;
  Var log_prob;  // (N,1)
};

// Squashed-Gaussian policy head: latent -> 2x256 ReLU trunk -> (mean, log_std),
// actions squashed to [-1,1] by tanh with the change-of-variables correction.
template <class T>
class SacActorT {
 public:
  static constexpr double kLogStdMin = -10.0;
  static constexpr double kLogStdMax = 2.0;

  SacActorT() = default;
  SacActorT(std::int64_t latent_dim, std::int64_t action_dim, std::int64_t hidden,
            std::mt19937_64& rng)
      : latent_dim_(latent_dim), action_dim_(action_dim) {
    params.add("w0", fanin_uniform<T>({hidden, latent_dim}, latent_dim, rng));
    params.add("b0", TensorT<T>::zeros({hidden}));
    params.add("w1", fanin_uniform<T>({hidden, hidden}, hidden, rng));
    params.add("b1", TensorT<T>::zeros({hidden}));
    params.add("mean.w", fanin_uniform<T>({action_dim, hidden}, hidden, rng));
    params.add("mean.b", TensorT<T>::zeros({action_dim}));
    params.add("logstd.w", fanin_uniform<T>({action_dim, hidden}, hidden, rng));
    params.add("logstd.b", TensorT<T>::zeros({action_dim}));
  }

  ActionSample<T> sample(TapeT<T>& t, Var latents, const TensorT<T>& noise, bool with_grad) {
    Var h = trunk(t, latents, with_grad);
    Var mean = dense(t, h, t.param(params, "mean.w", with_grad), t.param(params, "mean.b", with_grad));
    Var logstd = clamp(t,
                       dense(t, h, t.param(params, "logstd.w", with_grad),
                             t.param(params, "logstd.b", with_grad)),
                       T(kLogStdMin), T(kLogStdMax));
    Var sigma = exp_op(t, logstd);
    Var eps = t.leaf(noise);
    Var pre = add(t, mean, mul(t, sigma, eps));
    Var action = tanh_op(t, pre);
    // log N(pre | mean, sigma) - log(1 - tanh(pre)^2 + eps)
    Var lp = mul_const(t, square(t, eps), T(-0.5));
    lp = sub(t, lp, logstd);
    lp = sub(t, lp, log_op(t, add_const(t, neg(t, square(t, action)), T(1) + T(1e-6))));
    lp = add_const(t, lp, T(-0.5 * std::log(2.0 * std::numbers::pi_v<double>)));
    return {action, sum_rows(t, lp)};
  }

  Var mean_action(TapeT<T>& t, Var latents, bool with_grad) {
    Var h = trunk(t, latents, with_grad);
    Var mean = dense(t, h, t.param(params, "mean.w", with_grad), t.param(params, "mean.b", with_grad));
    return tanh_op(t, mean);
  }

  // Off-tape acting: deterministic mode returns tanh(mean).
  TensorT<T> act(const TensorT<T>& latents, const TensorT<T>* noise, bool deterministic) {
    TapeT<T> t;
    Var l = t.leaf(latents);
    if (deterministic) return t.value(mean_action(t, l, false));
    if (noise == nullptr) throw ConfigError("actor: stochastic action needs noise");
    return t.value(sample(t, l, *noise, false).action);
  }

  std::int64_t action_dim() const { return action_dim_; }
  std::int64_t latent_dim() const { return latent_dim_; }

  ParameterSetT<T> params;

 private:
  Var trunk(TapeT<T>& t, Var latents, bool with_grad) {
    if (t.value(latents).rank() != 2 || t.value(latents).dim(1) != latent_dim_) {
      throw ConfigError("actor: latent dimension mismatch");
    }
    Var h = relu(t, dense(t, latents, t.param(params, "w0", with_grad), t.param(params, "b0", with_grad)));
    return relu(t, dense(t, h, t.param(params, "w1", with_grad), t.param(params, "b1", with_grad)));
  }

  std::int64_t latent_dim_ = 0, action_dim_ = 0;
};

// Twin Q-networks over (latent, action) pairs, 2x256 ReLU each. One parameter
// set holds both critics so the EMA target update is a single blend.
template <class T>
class CriticPairT {
 public:
  CriticPairT() = default;
  CriticPairT(std::int64_t latent_dim, std::int64_t action_dim, std::int64_t hidden,
              std::mt19937_64& rng)
      : latent_dim_(latent_dim), action_dim_(action_dim) {
    const std::int64_t in = latent_dim + action_dim;
    for (const char* p : {"q1.", "q2."}) {
      const std::string pre(p);
      params.add(pre + "w0", fanin_uniform<T>({hidden, in}, in, rng));
      params.add(pre + "b0", TensorT<T>::zeros({hidden}));
      params.add(pre + "w1", fanin_uniform<T>({hidden, hidden}, hidden, rng));
      params.add(pre + "b1", TensorT<T>::zeros({hidden}));
      params.add(pre + "w2", fanin_uniform<T>({1, hidden}, hidden, rng));
      params.add(pre + "b2", TensorT<T>::zeros({1}));
    }
  }

  std::pair<Var, Var> forward(TapeT<T>& t, Var latents, Var actions, bool with_grad) {
    if (t.value(latents).dim(1) != latent_dim_ || t.value(actions).dim(1) != action_dim_) {
      throw ConfigError("critic: input dimension mismatch");
    }
    Var x = concat_cols(t, latents, actions);
    return {head(t, "q1.", x, with_grad), head(t, "q2.", x, with_grad)};
  }

  std::int64_t latent_dim() const { return latent_dim_; }
  std::int64_t action_dim() const { return action_dim_; }

  ParameterSetT<T> params;

 private:
  Var head(TapeT<T>& t, const char* prefix, Var x, bool with_grad) {
    const std::string pre(prefix);
    Var h = relu(t, dense(t, x, t.param(params, pre + "w0", with_grad), t.param(params, pre + "b0", with_grad)));
    h = relu(t, dense(t, h, t.param(params, pre + "w1", with_grad), t.param(params, pre + "b1", with_grad)));
    return dense(t, h, t.param(params, pre + "w2", with_grad), t.param(params, pre + "b2", with_grad));
  }

  std::int64_t latent_dim_ = 0, action_dim_ = 0;
};

// Entropy coefficient learned in log space; alpha stays positive by
// construction. Target entropy defaults to -dim(action).
template <class T>
struct EntropyCoefT {
  ParameterSetT<T> params;
  double target_entropy = 0.0;

  EntropyCoefT() = default;
  EntropyCoefT(double init_alpha, double target) : target_entropy(target) {
    if (init_alpha <= 0.0) throw ConfigError("entropy coefficient must start positive");
    params.add("log_alpha", TensorT<T>::scalar(static_cast<T>(std::log(init_alpha))));
  }

  double alpha() const {
    return std::exp(static_cast<double>(params.at("log_alpha").value.data[0]));
  }
};

// Soft Actor-Critic on top of externally supplied latents. The harness owns
// the encoder and drives the tapes; this class owns policy/critic/alpha
// parameters, their optimizers, and the loss builders.
template <class T>
class SacAgentT {
 public:
  SacAgentT() = default;
  SacAgentT(std::int64_t latent_dim, std::int64_t action_dim, std::int64_t hidden,
            double init_alpha, double actor_lr, double critic_lr, double alpha_lr,
            double critic_tau, std::mt19937_64& rng)
      : actor(latent_dim, action_dim, hidden, rng),
        critics(latent_dim, action_dim, hidden, rng),
        critic_targets(latent_dim, action_dim, hidden, rng),
        alpha(init_alpha, -static_cast<double>(action_dim)),
        critic_tau_(critic_tau) {
    copy_values(critic_targets.params, critics.params);
    actor_adam = AdamStateT<T>::for_params(actor.params, actor_lr);
    critic_adam = AdamStateT<T>::for_params(critics.params, critic_lr);
    alpha_adam = AdamStateT<T>::for_params(alpha.params, alpha_lr);
  }

  // Eq. 4 target, gradient-free: y = r + discount * (1-d) * (min_i Q*_i(o',a') - alpha*log pi(a'|o')).
  TensorT<T> compute_targets(const TensorT<T>& next_latents, const TensorT<T>& noise,
                             const std::vector<double>& total_rewards,
                             const std::vector<std::uint8_t>& done, double discount) {
    const std::int64_t n = next_latents.dim(0);
    if (static_cast<std::int64_t>(total_rewards.size()) != n ||
        static_cast<std::int64_t>(done.size()) != n) {
      throw ConfigError("compute_targets: batch size mismatch");
    }
    TapeT<T> t;
    Var nl = t.leaf(next_latents);
    auto sample = actor.sample(t, nl, noise, false);
    auto [tq1, tq2] = critic_targets_forward(t, nl, sample.action);
    Var tmin = min_elem(t, tq1, tq2);
    const auto& qv = t.value(tmin);
    const auto& lp = t.value(sample.log_prob);
    const double a = alpha.alpha();
    TensorT<T> y = TensorT<T>::zeros({n, 1});
    for (std::int64_t i = 0; i < n; ++i) {
      const double boot = static_cast<double>(qv(i, 0)) - a * static_cast<double>(lp(i, 0));
      const double yi = total_rewards[static_cast<std::size_t>(i)] +
                        discount * (done[static_cast<std::size_t>(i)] ? 0.0 : 1.0) * boot;
      if (!std::isfinite(yi)) throw NumericsError("compute_targets: non-finite target");
      y(i, 0) = static_cast<T>(yi);
    }
    return y;
  }

  // Sum over both critics of the mean squared Bellman error.
  Var critic_loss(TapeT<T>& t, Var latents, const TensorT<T>& actions, const TensorT<T>& targets) {
    Var act = t.leaf(actions);
    Var y = t.leaf(targets);
    auto [q1, q2] = critics.forward(t, latents, act, true);
    Var l1 = mean_all(t, square(t, sub(t, q1, y)));
    Var l2 = mean_all(t, square(t, sub(t, q2, y)));
    return add(t, l1, l2);
  }

  // Actor loss on detached latents: mean(alpha * log pi - min_i Q_i); the
  // critics participate as constants so their parameters get no gradient.
  Var actor_loss(TapeT<T>& t, Var latents_detached, const TensorT<T>& noise, Var* log_prob_out) {
    auto sample = actor.sample(t, latents_detached, noise, true);
    auto [q1, q2] = critics.forward(t, latents_detached, sample.action, false);
    Var qmin = min_elem(t, q1, q2);
    Var ent = mul_const(t, sample.log_prob, static_cast<T>(alpha.alpha()));
    if (log_prob_out != nullptr) *log_prob_out = sample.log_prob;
    return mean_all(t, sub(t, ent, qmin));
  }

  // Temperature loss: mean(-log_alpha * (log pi + target_entropy)).
  Var alpha_loss(TapeT<T>& t, const TensorT<T>& log_probs) {
    Var lp = t.leaf(log_probs);
    Var la = t.param(alpha.params, "log_alpha");
    return mean_all(t, neg(t, scale_by(t, add_const(t, lp, static_cast<T>(alpha.target_entropy)), la)));
  }

  // EMA update of the target critics.
  void sync_targets() { ema_blend(critic_targets.params, critics.params, critic_tau_); }

  std::pair<Var, Var> critic_targets_forward(TapeT<T>& t, Var latents, Var actions) {
    return critic_targets.forward(t, latents, actions, false);
  }

  double critic_tau() const { return critic_tau_; }

  SacActorT<T> actor;
  CriticPairT<T> critics;
  CriticPairT<T> critic_targets;
  EntropyCoefT<T> alpha;
  AdamStateT<T> actor_adam;
  AdamStateT<T> critic_adam;
  AdamStateT<T> alpha_adam;

 private:
  double critic_tau_ = 0.01;
};

}  // namespace ccfdm
