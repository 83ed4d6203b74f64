#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "ccfdm/harness.hpp"
#include "ccfdm/plot.hpp"

namespace {

// (flag, config key) pairs whose values pass through apply_kv so the CLI and
// the config file share one parser. CLI flags override file values.
struct KvFlag {
  std::string flag;
  std::string key;
  std::string value;
};

}  // namespace

int main(int argc, char** argv) {
  ccfdm::tune_allocator();
  CLI::App app{"Contrastive forward-dynamics RL from pixels"};
  app.require_subcommand(1);

  // --- train ---------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Run the training loop");
  std::string config_path;
  train->add_option("--config", config_path, "key=value config file; flags override it");

  std::vector<KvFlag> kv = {
      {"--env", "env", ""},
      {"--steps", "total_steps", ""},
      {"--seed", "seed", ""},
      {"--batch-size", "batch_size", ""},
      {"--intrinsic-weight", "intrinsic_weight", ""},
      {"--intrinsic-decay", "intrinsic_decay", ""},
      {"--ema-tau", "ema_tau", ""},
      {"--momentum-freq", "momentum_freq", ""},
      {"--similarity", "similarity", ""},
      {"--out", "out_dir", ""},
      {"--resume", "resume_path", ""},
      {"--trace", "trace_path", ""},
      {"--warmup", "warmup_steps", ""},
      {"--eval-interval", "eval_interval", ""},
      {"--eval-episodes", "eval_episodes", ""},
      {"--capacity", "replay_capacity", ""},
      {"--raw-size", "raw_size", ""},
      {"--crop-size", "crop_size", ""},
      {"--frame-stack", "frame_stack", ""},
      {"--action-repeat", "action_repeat", ""},
      {"--discount", "discount", ""},
      {"--contrastive-lr", "contrastive_lr", ""},
      {"--actor-lr", "actor_lr", ""},
      {"--critic-lr", "critic_lr", ""},
      {"--alpha-lr", "alpha_lr", ""},
      {"--checkpoint-interval", "checkpoint_interval", ""},
      {"--latent-dim", "latent_dim", ""},
      {"--hidden-dim", "hidden_dim", ""},
  };
  for (auto& f : kv) train->add_option(f.flag, f.value, "");
  bool no_contrastive = false, no_curiosity = false, no_augment = false;
  bool no_final_checkpoint = false, no_wall_time = false;
  train->add_flag("--no-contrastive", no_contrastive, "Disable the contrastive objective");
  train->add_flag("--no-curiosity", no_curiosity, "Disable intrinsic rewards");
  train->add_flag("--no-augment", no_augment, "Center crops instead of random crops");
  train->add_flag("--no-final-checkpoint", no_final_checkpoint, "Skip the final checkpoint");
  train->add_flag("--no-wall-time", no_wall_time, "Write 0.000 wall_time_s (bitwise-comparable runs)");

  // --- eval ----------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpointed agent");
  std::string ckpt_path;
  std::int64_t eval_episodes = 10;
  std::uint64_t eval_seed = 1;
  eval->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  eval->add_option("--episodes", eval_episodes, "Number of evaluation episodes");
  eval->add_option("--seed", eval_seed, "Evaluation seed");

  // --- plot ----------------------------------------------------------------
  auto* plot = app.add_subcommand("plot", "Export evaluation curves from a metrics file");
  std::string metrics_path, plot_out;
  plot->add_option("--metrics", metrics_path, "Metrics CSV produced by train")->required();
  plot->add_option("--out", plot_out, "Output image path (BMP); series CSV written beside it")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      ccfdm::TrainConfig cfg;
      if (!config_path.empty()) cfg = ccfdm::parse_config_file(config_path);
      for (const auto& f : kv) {
        if (train->count(f.flag) > 0) ccfdm::apply_kv(cfg, f.key, f.value);
      }
      if (no_contrastive) cfg.no_contrastive = true;
      if (no_curiosity) cfg.no_curiosity = true;
      if (no_augment) cfg.no_augment = true;
      if (no_final_checkpoint) cfg.final_checkpoint = false;
      if (no_wall_time) cfg.log_wall_time = false;

      const auto res = ccfdm::run_training(cfg);
      std::printf("steps=%lld updates=%lld episodes=%lld evals=%lld momentum_syncs=%lld\n",
                  static_cast<long long>(res.env_steps), static_cast<long long>(res.updates),
                  static_cast<long long>(res.episodes), static_cast<long long>(res.evals),
                  static_cast<long long>(res.momentum_syncs));
      if (res.has_final_eval) {
        std::printf("final_eval_mean=%.6f final_eval_std=%.6f\n", res.final_eval_mean,
                    res.final_eval_std);
      }
      std::printf("metrics=%s\n", res.metrics_path.c_str());
      if (!res.checkpoint_path.empty()) std::printf("checkpoint=%s\n", res.checkpoint_path.c_str());
    } else if (eval->parsed()) {
      ccfdm::TrainConfig cfg = ccfdm::config_from_checkpoint(ckpt_path);
      cfg.resume_path = ckpt_path;
      ccfdm::Trainer trainer(cfg);
      auto [mean, std] = trainer.evaluate(eval_episodes, eval_seed);
      std::printf("episodes=%lld mean=%.6f std=%.6f\n", static_cast<long long>(eval_episodes),
                  mean, std);
    } else if (plot->parsed()) {
      const auto series = ccfdm::export_curves(metrics_path, plot_out);
      std::printf("image=%s series=%s\n", plot_out.c_str(), series.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
