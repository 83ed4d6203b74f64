#pragma once

#include <chrono>
#include <fstream>
#include <memory>
#include <string>
#include <utility>

#include "ccfdm/config.hpp"
#include "ccfdm/contrastive.hpp"
#include "ccfdm/curiosity.hpp"
#include "ccfdm/env.hpp"
#include "ccfdm/metrics.hpp"
#include "ccfdm/nets.hpp"
#include "ccfdm/replay.hpp"
#include "ccfdm/sac.hpp"

namespace ccfdm {

// Training computes at 32-bit; gradient checks in the test suites use the
// 64-bit instantiations of the same templates.
using Real = float;

struct TrainResult {
  std::string metrics_path;
  std::string config_path;
  std::string checkpoint_path;  // empty if no final checkpoint written
  std::int64_t env_steps = 0;
  std::int64_t updates = 0;
  std::int64_t momentum_syncs = 0;
  std::int64_t episodes = 0;
  std::int64_t evals = 0;
  double final_eval_mean = 0.0;
  double final_eval_std = 0.0;
  bool has_final_eval = false;
};

// The full training loop: warm-up, interaction, batched updates
// (contrastive + curiosity + SAC), momentum sync, periodic evaluation,
// metrics, and checkpointing.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  TrainResult train();

  // Deterministic-policy evaluation on fresh environments seeded from
  // eval_seed; training state is not touched.
  std::pair<double, double> evaluate(std::int64_t episodes, std::uint64_t eval_seed);

  // Mean return of uniform-random actions, measured with the same
  // environment construction as training.
  static double random_baseline(const TrainConfig& cfg, std::int64_t episodes, std::uint64_t seed);

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

  std::int64_t env_step() const { return env_step_; }
  std::int64_t update_count() const { return update_count_; }
  std::int64_t momentum_sync_count() const { return momentum_sync_count_; }
  std::int64_t target_sync_count() const { return target_sync_count_; }
  std::int64_t actor_update_count() const { return actor_update_count_; }
  const TrainConfig& config() const { return cfg_; }
  const CuriosityState& curiosity() const { return curiosity_; }

  PixelEncoderT<Real>& query_encoder() { return qe_; }
  PixelEncoderT<Real>& key_encoder() { return ke_; }
  MlpT<Real>& action_embed() { return action_embed_; }
  MlpT<Real>& dynamics_model() { return fdm_; }
  SacAgentT<Real>& agent() { return agent_; }

 private:
  void step_once();
  void update();
  void write_episode_row();
  void write_eval_row(double mean, double std);
  double wall_seconds() const;
  TensorT<Real> encode_for_acting() const;
  std::uint64_t next_episode_seed();

  TrainConfig cfg_;
  SimilarityKind sim_kind_;
  std::unique_ptr<PixelControlEnv> env_;
  ReplayBuffer buffer_;
  CuriosityState curiosity_;

  PixelEncoderT<Real> qe_;
  PixelEncoderT<Real> ke_;
  MlpT<Real> action_embed_;
  MlpT<Real> fdm_;
  BilinearWeightT<Real> bilinear_;
  SacAgentT<Real> agent_;

  AdamStateT<Real> qe_contrastive_adam_;
  AdamStateT<Real> ae_adam_;
  AdamStateT<Real> fdm_adam_;
  AdamStateT<Real> bilinear_adam_;
  AdamStateT<Real> qe_critic_adam_;

  std::mt19937_64 rng_env_;
  std::mt19937_64 rng_crop_q_;
  std::mt19937_64 rng_crop_k_;
  std::mt19937_64 rng_actor_;
  std::mt19937_64 rng_replay_;

  std::vector<std::uint8_t> obs_;
  std::int64_t env_step_ = 0;
  std::int64_t update_count_ = 0;
  std::int64_t momentum_sync_count_ = 0;
  std::int64_t target_sync_count_ = 0;
  std::int64_t actor_update_count_ = 0;
  std::int64_t episode_count_ = 0;
  std::int64_t eval_count_ = 0;
  double episode_return_ = 0.0;
  std::int64_t episode_len_ = 0;

  // Accumulators for the per-episode loss means.
  double acc_contrastive_ = 0.0;
  double acc_critic_ = 0.0;
  double acc_actor_ = 0.0;
  double acc_intrinsic_ = 0.0;
  std::int64_t acc_updates_ = 0;
  std::int64_t acc_actor_updates_ = 0;

  std::unique_ptr<MetricsWriter> metrics_;
  std::unique_ptr<std::ofstream> trace_;
  std::chrono::steady_clock::time_point wall_start_;
  double wall_offset_ = 0.0;

  double last_eval_mean_ = 0.0;
  double last_eval_std_ = 0.0;
  bool has_eval_ = false;
};

// Convenience wrapper: construct, train, return the result.
TrainResult run_training(const TrainConfig& cfg);

// Reads the effective config stored inside a checkpoint file.
TrainConfig config_from_checkpoint(const std::string& path);

}  // namespace ccfdm
