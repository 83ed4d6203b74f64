#include "ccfdm/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ccfdm/checkpoint.hpp"

namespace ccfdm {

namespace {

// Config identity for resume checks: run-local fields blanked out.
std::string config_identity(TrainConfig c) {
  c.out_dir.clear();
  c.resume_path.clear();
  c.trace_path.clear();
  c.total_steps = 0;
  c.checkpoint_interval = 0;
  c.final_checkpoint = false;
  c.log_wall_time = false;
  return render_config(c);
}

}  // namespace

Trainer::Trainer(TrainConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  sim_kind_ = parse_similarity(cfg_.similarity);

  env_ = make_env(cfg_.env, cfg_.raw_size, cfg_.frame_stack, cfg_.action_repeat);
  buffer_ = ReplayBuffer(cfg_.replay_capacity, env_->obs_bytes(), env_->action_dim());
  curiosity_.intrinsic_weight = cfg_.intrinsic_weight;
  curiosity_.decay = cfg_.intrinsic_decay;

  std::mt19937_64 init_rng = make_stream(cfg_.seed, Stream::Init);
  const std::int64_t dz = cfg_.latent_dim;
  const std::int64_t da = cfg_.action_feature_dim;
  const std::int64_t adim = env_->action_dim();
  qe_ = PixelEncoderT<Real>(cfg_.frame_stack, cfg_.crop_size, cfg_.crop_size, dz, init_rng);
  ke_ = PixelEncoderT<Real>(cfg_.frame_stack, cfg_.crop_size, cfg_.crop_size, dz, init_rng);
  copy_values(ke_.params, qe_.params);
  action_embed_ = MlpT<Real>({adim, 50, 50, da}, init_rng);
  fdm_ = MlpT<Real>({dz + da, 50, 50, dz}, init_rng);
  bilinear_ = BilinearWeightT<Real>(dz);
  agent_ = SacAgentT<Real>(dz, adim, cfg_.hidden_dim, cfg_.init_alpha, cfg_.actor_lr,
                           cfg_.critic_lr, cfg_.alpha_lr, cfg_.critic_tau, init_rng);

  qe_contrastive_adam_ = AdamStateT<Real>::for_params(qe_.params, cfg_.contrastive_lr);
  ae_adam_ = AdamStateT<Real>::for_params(action_embed_.params, cfg_.contrastive_lr);
  fdm_adam_ = AdamStateT<Real>::for_params(fdm_.params, cfg_.contrastive_lr);
  bilinear_adam_ = AdamStateT<Real>::for_params(bilinear_.params, cfg_.contrastive_lr);
  qe_critic_adam_ = AdamStateT<Real>::for_params(qe_.params, cfg_.critic_lr);

  rng_env_ = make_stream(cfg_.seed, Stream::Env);
  rng_crop_q_ = make_stream(cfg_.seed, Stream::CropQuery);
  rng_crop_k_ = make_stream(cfg_.seed, Stream::CropKey);
  rng_actor_ = make_stream(cfg_.seed, Stream::Actor);
  rng_replay_ = make_stream(cfg_.seed, Stream::Replay);

  obs_ = env_->reset(next_episode_seed());
  wall_start_ = std::chrono::steady_clock::now();

  if (!cfg_.resume_path.empty()) load_checkpoint(cfg_.resume_path);
}

std::uint64_t Trainer::next_episode_seed() { return rng_env_(); }

double Trainer::wall_seconds() const {
  if (!cfg_.log_wall_time) return 0.0;
  return wall_offset_ +
         std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start_).count();
}

TensorT<Real> Trainer::encode_for_acting() const {
  auto cropped = center_crop<Real>(obs_, cfg_.frame_stack, cfg_.raw_size, cfg_.raw_size,
                                   cfg_.crop_size, cfg_.crop_size);
  TensorT<Real> batch({1, cfg_.frame_stack, cfg_.crop_size, cfg_.crop_size},
                      std::move(cropped.data));
  // the encoder is logically const here; forward does not mutate parameters
  auto& qe = const_cast<PixelEncoderT<Real>&>(qe_);
  return qe.encode(batch);
}

TrainResult Trainer::train() {
  namespace fs = std::filesystem;
  fs::create_directories(cfg_.out_dir);
  write_config(cfg_, cfg_.out_dir + "/config.txt");
  metrics_ = std::make_unique<MetricsWriter>(cfg_.out_dir + "/metrics.csv");
  if (!cfg_.trace_path.empty()) {
    trace_ = std::make_unique<std::ofstream>(cfg_.trace_path, std::ios::trunc);
    if (!*trace_) throw IoError("trainer: cannot open trace file " + cfg_.trace_path);
  }
  wall_start_ = std::chrono::steady_clock::now();

  while (env_step_ < cfg_.total_steps) {
    try {
      step_once();
    } catch (const NumericsError&) {
      // divergence: leave a resumable checkpoint behind, then abort
      save_checkpoint(cfg_.out_dir + "/abort_checkpoint.bin");
      throw;
    }
    if (cfg_.checkpoint_interval > 0 && env_step_ % cfg_.checkpoint_interval == 0) {
      save_checkpoint(cfg_.out_dir + "/checkpoint.bin");
    }
  }

  TrainResult res;
  res.metrics_path = metrics_->path();
  res.config_path = cfg_.out_dir + "/config.txt";
  if (cfg_.final_checkpoint) {
    res.checkpoint_path = cfg_.out_dir + "/checkpoint.bin";
    save_checkpoint(res.checkpoint_path);
  }
  res.env_steps = env_step_;
  res.updates = update_count_;
  res.momentum_syncs = momentum_sync_count_;
  res.episodes = episode_count_;
  res.evals = eval_count_;
  res.final_eval_mean = last_eval_mean_;
  res.final_eval_std = last_eval_std_;
  res.has_final_eval = has_eval_;
  return res;
}

void Trainer::step_once() {
  const std::int64_t adim = env_->action_dim();
  std::vector<double> action(static_cast<std::size_t>(adim));
  if (env_step_ < cfg_.warmup_steps) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& a : action) a = uni(rng_actor_);
  } else {
    auto latents = encode_for_acting();
    auto noise = normal_tensor<Real>({1, adim}, rng_actor_);
    auto act = agent_.actor.act(latents, &noise, false);
    for (std::int64_t i = 0; i < adim; ++i) action[static_cast<std::size_t>(i)] = act(0, i);
  }

  EnvStep result = env_->step(action);
  ++env_step_;
  episode_return_ += result.reward;
  ++episode_len_;

  Transition tr;
  tr.obs = obs_;
  tr.action = action;
  tr.reward = result.reward;
  tr.next_obs = result.obs;
  tr.done = result.done;
  buffer_.push(std::move(tr));
  obs_ = result.obs;

  if (env_step_ > cfg_.warmup_steps && buffer_.size() >= cfg_.batch_size) update();

  if (result.done) {
    write_episode_row();
    ++episode_count_;
    episode_return_ = 0.0;
    episode_len_ = 0;
    obs_ = env_->reset(next_episode_seed());
  }

  if (cfg_.eval_episodes > 0 && env_step_ % cfg_.eval_interval == 0) {
    auto [mean, std] = evaluate(cfg_.eval_episodes, derive_seed(cfg_.seed, 0xe7a1, eval_count_));
    last_eval_mean_ = mean;
    last_eval_std_ = std;
    has_eval_ = true;
    write_eval_row(mean, std);
    ++eval_count_;
  }
}

void Trainer::update() {
  ++update_count_;
  const std::int64_t k = cfg_.batch_size;
  const std::int64_t s = cfg_.frame_stack;
  const std::int64_t raw = cfg_.raw_size;
  const std::int64_t crop = cfg_.crop_size;
  const std::int64_t adim = env_->action_dim();
  const std::int64_t frame = crop * crop;

  auto indices = buffer_.sample_indices(k, rng_replay_);
  auto obs_q = TensorT<Real>::zeros({k, s, crop, crop});
  auto obs_k = TensorT<Real>::zeros({k, s, crop, crop});
  auto actions = TensorT<Real>::zeros({k, adim});
  std::vector<double> reward_e(static_cast<std::size_t>(k));
  std::vector<std::uint8_t> done(static_cast<std::size_t>(k));

  for (std::int64_t j = 0; j < k; ++j) {
    const auto& tr = buffer_.at(indices[static_cast<std::size_t>(j)]);
    std::int64_t qt = (raw - crop) / 2, ql = qt, kt = qt, kl = qt;
    if (!cfg_.no_augment) {
      std::tie(qt, ql) = crop_offsets(raw, raw, crop, crop, rng_crop_q_);
      std::tie(kt, kl) = crop_offsets(raw, raw, crop, crop, rng_crop_k_);
    }
    crop_stack_into(obs_q.data.data() + j * s * frame, tr.obs.data(), s, raw, raw, qt, ql, crop, crop);
    crop_stack_into(obs_k.data.data() + j * s * frame, tr.next_obs.data(), s, raw, raw, kt, kl, crop, crop);
    for (std::int64_t i = 0; i < adim; ++i) {
      actions(j, i) = static_cast<Real>(tr.action[static_cast<std::size_t>(i)]);
    }
    reward_e[static_cast<std::size_t>(j)] = tr.reward;
    done[static_cast<std::size_t>(j)] = tr.done ? 1 : 0;
  }

  // Lines 5-7: encode query/key, predict the next latent, intrinsic rewards
  // from the prediction error, then one contrastive gradient step.
  std::vector<double> reward_total = reward_e;
  const bool need_latents = !cfg_.no_contrastive || !cfg_.no_curiosity;
  if (need_latents) {
    const bool grad = !cfg_.no_contrastive;
    TapeT<Real> tape;
    Var q = qe_.forward(tape, obs_q, grad);
    TensorT<Real> keys = tape.value(ke_.forward(tape, obs_k, false));
    Var ae = action_embed_.forward(tape, tape.leaf(actions), grad);
    Var qpred = fdm_.forward(tape, concat_cols(tape, q, ae), grad);

    if (!cfg_.no_curiosity) {
      const auto& pred = tape.value(qpred);
      const std::int64_t dz = cfg_.latent_dim;
      curiosity_.step = static_cast<std::uint64_t>(env_step_);
      std::vector<double> errors(static_cast<std::size_t>(k));
      for (std::int64_t j = 0; j < k; ++j) {
        errors[static_cast<std::size_t>(j)] =
            prediction_error(pred.data.data() + j * dz, keys.data.data() + j * dz, dz);
      }
      for (std::int64_t j = 0; j < k; ++j) {
        update_maxima(curiosity_, reward_e[static_cast<std::size_t>(j)],
                      errors[static_cast<std::size_t>(j)]);
      }
      double ri_sum = 0.0;
      for (std::int64_t j = 0; j < k; ++j) {
        const double ri = intrinsic_reward(curiosity_, errors[static_cast<std::size_t>(j)]);
        reward_total[static_cast<std::size_t>(j)] += ri;
        ri_sum += ri;
      }
      acc_intrinsic_ += ri_sum / static_cast<double>(k);
    }

    if (!cfg_.no_contrastive) {
      Var logits = similarity_logits(tape, qpred, keys, sim_kind_, &bilinear_, true);
      Var loss = info_nce_loss(tape, logits);
      acc_contrastive_ += static_cast<double>(tape.value(loss).data[0]);
      qe_.params.zero_grads();
      action_embed_.params.zero_grads();
      fdm_.params.zero_grads();
      bilinear_.params.zero_grads();
      tape.backward(loss);
      adam_step(qe_.params, qe_contrastive_adam_);
      adam_step(action_embed_.params, ae_adam_);
      adam_step(fdm_.params, fdm_adam_);
      if (sim_kind_ == SimilarityKind::kBilinear) adam_step(bilinear_.params, bilinear_adam_);
    }
  }

  if (trace_) {
    std::uint64_t h = fnv1a64(indices.data(), indices.size() * sizeof(indices[0]));
    h = fnv1a64(obs_q.data.data(), obs_q.data.size() * sizeof(Real), h);
    h = fnv1a64(obs_k.data.data(), obs_k.data.size() * sizeof(Real), h);
    h = fnv1a64(actions.data.data(), actions.data.size() * sizeof(Real), h);
    h = fnv1a64(reward_total.data(), reward_total.size() * sizeof(double), h);
    h = fnv1a64(done.data(), done.size(), h);
    (*trace_) << update_count_ << ',' << env_step_ << ',' << std::hex << h << std::dec << '\n';
    trace_->flush();
  }

  // Line 8: SAC update with r_e + r_i. The next observation enters through
  // its key crop, encoded by the query encoder without gradient.
  TensorT<Real> next_latents;
  {
    TapeT<Real> tape;
    next_latents = tape.value(qe_.forward(tape, obs_k, false));
  }
  auto target_noise = normal_tensor<Real>({k, adim}, rng_actor_);
  auto targets = agent_.compute_targets(next_latents, target_noise, reward_total, done, cfg_.discount);

  TensorT<Real> latent_values;
  {
    TapeT<Real> tape;
    Var latents = qe_.forward(tape, obs_q, true);
    Var closs = agent_.critic_loss(tape, latents, actions, targets);
    acc_critic_ += static_cast<double>(tape.value(closs).data[0]);
    latent_values = tape.value(latents);
    qe_.params.zero_grads();
    agent_.critics.params.zero_grads();
    tape.backward(closs);
    adam_step(agent_.critics.params, agent_.critic_adam);
    adam_step(qe_.params, qe_critic_adam_);
  }
  ++acc_updates_;

  if (update_count_ % cfg_.actor_update_freq == 0) {
    auto actor_noise = normal_tensor<Real>({k, adim}, rng_actor_);
    TensorT<Real> log_probs;
    {
      TapeT<Real> tape;
      Var latents = tape.leaf(latent_values);  // detached: no encoder gradient
      Var lp{};
      Var aloss = agent_.actor_loss(tape, latents, actor_noise, &lp);
      acc_actor_ += static_cast<double>(tape.value(aloss).data[0]);
      log_probs = tape.value(lp);
      agent_.actor.params.zero_grads();
      tape.backward(aloss);
      adam_step(agent_.actor.params, agent_.actor_adam);
    }
    {
      TapeT<Real> tape;
      Var aloss = agent_.alpha_loss(tape, log_probs);
      agent_.alpha.params.zero_grads();
      tape.backward(aloss);
      adam_step(agent_.alpha.params, agent_.alpha_adam);
    }
    ++actor_update_count_;
    ++acc_actor_updates_;
  }

  if (update_count_ % cfg_.target_update_freq == 0) {
    agent_.sync_targets();
    ++target_sync_count_;
  }

  // Lines 9-11: momentum update of the key encoder every eta updates.
  if (!cfg_.no_contrastive && update_count_ % cfg_.momentum_freq == 0) {
    ema_blend(ke_.params, qe_.params, cfg_.ema_tau);
    ++momentum_sync_count_;
  }
}

void Trainer::write_episode_row() {
  MetricsRow row;
  row.env_step = env_step_;
  row.episode_return = episode_return_;
  if (acc_updates_ > 0) {
    if (!cfg_.no_contrastive) {
      row.contrastive_loss = acc_contrastive_ / static_cast<double>(acc_updates_);
    }
    row.critic_loss = acc_critic_ / static_cast<double>(acc_updates_);
    if (acc_actor_updates_ > 0) {
      row.actor_loss = acc_actor_ / static_cast<double>(acc_actor_updates_);
    }
    row.mean_intrinsic_reward =
        cfg_.no_curiosity ? 0.0 : acc_intrinsic_ / static_cast<double>(acc_updates_);
  }
  row.alpha = agent_.alpha.alpha();
  row.re_max = curiosity_.re_max;
  row.ri_max = curiosity_.ri_max;
  row.wall_time_s = wall_seconds();
  metrics_->append(row);
  acc_contrastive_ = acc_critic_ = acc_actor_ = acc_intrinsic_ = 0.0;
  acc_updates_ = acc_actor_updates_ = 0;
}

void Trainer::write_eval_row(double mean, double std) {
  MetricsRow row;
  row.env_step = env_step_;
  row.eval_return_mean = mean;
  row.eval_return_std = std;
  row.alpha = agent_.alpha.alpha();
  row.re_max = curiosity_.re_max;
  row.ri_max = curiosity_.ri_max;
  row.wall_time_s = wall_seconds();
  metrics_->append(row);
}

std::pair<double, double> Trainer::evaluate(std::int64_t episodes, std::uint64_t eval_seed) {
  if (episodes <= 0) throw ConfigError("evaluate: episode count must be positive");
  auto env = make_env(cfg_.env, cfg_.raw_size, cfg_.frame_stack, cfg_.action_repeat);
  const std::int64_t adim = env->action_dim();
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(episodes));
  for (std::int64_t e = 0; e < episodes; ++e) {
    auto obs = env->reset(derive_seed(eval_seed, 17, static_cast<std::uint64_t>(e)));
    double ret = 0.0;
    while (!env->episode_done()) {
      auto cropped = center_crop<Real>(obs, cfg_.frame_stack, cfg_.raw_size, cfg_.raw_size,
                                       cfg_.crop_size, cfg_.crop_size);
      TensorT<Real> batch({1, cfg_.frame_stack, cfg_.crop_size, cfg_.crop_size},
                          std::move(cropped.data));
      auto latents = qe_.encode(batch);
      auto act = agent_.actor.act(latents, nullptr, true);
      std::vector<double> action(static_cast<std::size_t>(adim));
      for (std::int64_t i = 0; i < adim; ++i) action[static_cast<std::size_t>(i)] = act(0, i);
      auto step = env->step(action);
      ret += step.reward;
      obs = std::move(step.obs);
    }
    returns.push_back(ret);
  }
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(returns.size());
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= static_cast<double>(returns.size());
  return {mean, std::sqrt(var)};
}

double Trainer::random_baseline(const TrainConfig& cfg, std::int64_t episodes, std::uint64_t seed) {
  auto env = make_env(cfg.env, cfg.raw_size, cfg.frame_stack, cfg.action_repeat);
  std::mt19937_64 rng = make_stream(seed, Stream::Eval);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double total = 0.0;
  for (std::int64_t e = 0; e < episodes; ++e) {
    env->reset(derive_seed(seed, 23, static_cast<std::uint64_t>(e)));
    double ret = 0.0;
    while (!env->episode_done()) {
      std::vector<double> action(static_cast<std::size_t>(env->action_dim()));
      for (auto& a : action) a = uni(rng);
      ret += env->step(action).reward;
    }
    total += ret;
  }
  return total / static_cast<double>(episodes);
}

void Trainer::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot open " + path + " for writing");
  ckpt::write_header(out);
  ckpt::write_string(out, render_config(cfg_));

  ckpt::write_u64(out, static_cast<std::uint64_t>(env_step_));
  ckpt::write_u64(out, static_cast<std::uint64_t>(update_count_));
  ckpt::write_u64(out, static_cast<std::uint64_t>(momentum_sync_count_));
  ckpt::write_u64(out, static_cast<std::uint64_t>(target_sync_count_));
  ckpt::write_u64(out, static_cast<std::uint64_t>(actor_update_count_));
  ckpt::write_u64(out, static_cast<std::uint64_t>(episode_count_));
  ckpt::write_u64(out, static_cast<std::uint64_t>(eval_count_));
  ckpt::write_f64(out, episode_return_);
  ckpt::write_u64(out, static_cast<std::uint64_t>(episode_len_));
  ckpt::write_f64(out, acc_contrastive_);
  ckpt::write_f64(out, acc_critic_);
  ckpt::write_f64(out, acc_actor_);
  ckpt::write_f64(out, acc_intrinsic_);
  ckpt::write_u64(out, static_cast<std::uint64_t>(acc_updates_));
  ckpt::write_u64(out, static_cast<std::uint64_t>(acc_actor_updates_));
  ckpt::write_f64(out, last_eval_mean_);
  ckpt::write_f64(out, last_eval_std_);
  ckpt::write_u8(out, has_eval_ ? 1 : 0);
  ckpt::write_f64(out, wall_seconds());

  ckpt::write_f64(out, curiosity_.re_max);
  ckpt::write_f64(out, curiosity_.ri_max);
  ckpt::write_u64(out, curiosity_.step);

  ckpt::write_param_set(out, "query_encoder", qe_.params);
  ckpt::write_param_set(out, "key_encoder", ke_.params);
  ckpt::write_param_set(out, "action_embed", action_embed_.params);
  ckpt::write_param_set(out, "dynamics_model", fdm_.params);
  ckpt::write_param_set(out, "bilinear", bilinear_.params);
  ckpt::write_param_set(out, "actor", agent_.actor.params);
  ckpt::write_param_set(out, "critics", agent_.critics.params);
  ckpt::write_param_set(out, "critic_targets", agent_.critic_targets.params);
  ckpt::write_param_set(out, "alpha", agent_.alpha.params);

  ckpt::write_adam(out, "adam.qe_contrastive", qe_contrastive_adam_);
  ckpt::write_adam(out, "adam.action_embed", ae_adam_);
  ckpt::write_adam(out, "adam.dynamics", fdm_adam_);
  ckpt::write_adam(out, "adam.bilinear", bilinear_adam_);
  ckpt::write_adam(out, "adam.qe_critic", qe_critic_adam_);
  ckpt::write_adam(out, "adam.actor", agent_.actor_adam);
  ckpt::write_adam(out, "adam.critic", agent_.critic_adam);
  ckpt::write_adam(out, "adam.alpha", agent_.alpha_adam);

  ckpt::write_rng(out, rng_env_);
  ckpt::write_rng(out, rng_crop_q_);
  ckpt::write_rng(out, rng_crop_k_);
  ckpt::write_rng(out, rng_actor_);
  ckpt::write_rng(out, rng_replay_);

  {
    std::ostringstream env_state;
    env_->save_state(env_state);
    ckpt::write_string(out, env_state.str());
  }
  ckpt::write_u64(out, obs_.size());
  ckpt::write_bytes(out, obs_.data(), obs_.size());

  ckpt::write_replay(out, buffer_);
  ckpt::write_end(out);
  if (!out) throw IoError("checkpoint: write failed for " + path);
}

void Trainer::load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  ckpt::read_header(in);

  const std::string stored_config = ckpt::read_string(in);
  {
    std::istringstream is(stored_config);
    TrainConfig stored;
    std::string line;
    while (std::getline(is, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos || line.empty()) continue;
      apply_kv(stored, line.substr(0, eq), line.substr(eq + 1));
    }
    if (config_identity(stored) != config_identity(cfg_)) {
      throw IoError("checkpoint: stored config does not match this run's config");
    }
  }

  env_step_ = static_cast<std::int64_t>(ckpt::read_u64(in));
  update_count_ = static_cast<std::int64_t>(ckpt::read_u64(in));
  momentum_sync_count_ = static_cast<std::int64_t>(ckpt::read_u64(in));
  target_sync_count_ = static_cast<std::int64_t>(ckpt::read_u64(in));
  actor_update_count_ = static_cast<std::int64_t>(ckpt::read_u64(in));
  episode_count_ = static_cast<std::int64_t>(ckpt::read_u64(in));
  eval_count_ = static_cast<std::int64_t>(ckpt::read_u64(in));
  episode_return_ = ckpt::read_f64(in);
  episode_len_ = static_cast<std::int64_t>(ckpt::read_u64(in));
  acc_contrastive_ = ckpt::read_f64(in);
  acc_critic_ = ckpt::read_f64(in);
  acc_actor_ = ckpt::read_f64(in);
  acc_intrinsic_ = ckpt::read_f64(in);
  acc_updates_ = static_cast<std::int64_t>(ckpt::read_u64(in));
  acc_actor_updates_ = static_cast<std::int64_t>(ckpt::read_u64(in));
  last_eval_mean_ = ckpt::read_f64(in);
  last_eval_std_ = ckpt::read_f64(in);
  has_eval_ = ckpt::read_u8(in) != 0;
  wall_offset_ = ckpt::read_f64(in);
  wall_start_ = std::chrono::steady_clock::now();

  curiosity_.re_max = ckpt::read_f64(in);
  curiosity_.ri_max = ckpt::read_f64(in);
  curiosity_.step = ckpt::read_u64(in);

  ckpt::read_param_set(in, "query_encoder", qe_.params);
  ckpt::read_param_set(in, "key_encoder", ke_.params);
  ckpt::read_param_set(in, "action_embed", action_embed_.params);
  ckpt::read_param_set(in, "dynamics_model", fdm_.params);
  ckpt::read_param_set(in, "bilinear", bilinear_.params);
  ckpt::read_param_set(in, "actor", agent_.actor.params);
  ckpt::read_param_set(in, "critics", agent_.critics.params);
  ckpt::read_param_set(in, "critic_targets", agent_.critic_targets.params);
  ckpt::read_param_set(in, "alpha", agent_.alpha.params);

  ckpt::read_adam(in, "adam.qe_contrastive", qe_contrastive_adam_);
  ckpt::read_adam(in, "adam.action_embed", ae_adam_);
  ckpt::read_adam(in, "adam.dynamics", fdm_adam_);
  ckpt::read_adam(in, "adam.bilinear", bilinear_adam_);
  ckpt::read_adam(in, "adam.qe_critic", qe_critic_adam_);
  ckpt::read_adam(in, "adam.actor", agent_.actor_adam);
  ckpt::read_adam(in, "adam.critic", agent_.critic_adam);
  ckpt::read_adam(in, "adam.alpha", agent_.alpha_adam);

  ckpt::read_rng(in, rng_env_);
  ckpt::read_rng(in, rng_crop_q_);
  ckpt::read_rng(in, rng_crop_k_);
  ckpt::read_rng(in, rng_actor_);
  ckpt::read_rng(in, rng_replay_);

  {
    std::istringstream env_state(ckpt::read_string(in));
    env_->load_state(env_state);
  }
  const auto obs_len = ckpt::read_u64(in);
  if (obs_len != static_cast<std::uint64_t>(env_->obs_bytes())) {
    throw IoError("checkpoint: observation stack size mismatch");
  }
  obs_.resize(obs_len);
  ckpt::read_bytes(in, obs_.data(), obs_.size());

  ckpt::read_replay(in, buffer_);
  ckpt::read_end(in);
}

TrainResult run_training(const TrainConfig& cfg) {
  Trainer trainer(cfg);
  return trainer.train();
}

TrainConfig config_from_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  ckpt::read_header(in);
  const std::string text = ckpt::read_string(in);
  TrainConfig cfg;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || line.empty()) continue;
    apply_kv(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

}  // namespace ccfdm
