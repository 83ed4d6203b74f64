#include "ccfdm/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ccfdm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::int64_t to_i64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const auto r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const auto r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad unsigned integer for " + key + ": '" + v + "'");
  }
}

double to_f64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const auto r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: bad real for " + key + ": '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (env != "pendulum" && env != "pointmass") throw ConfigError("config: unknown env " + env);
  if (total_steps < 0) throw ConfigError("config: total_steps must be >= 0");
  if (batch_size <= 0) throw ConfigError("config: batch_size must be positive");
  if (replay_capacity <= 0) throw ConfigError("config: replay_capacity must be positive");
  if (warmup_steps < 0) throw ConfigError("config: warmup_steps must be >= 0");
  if (eval_interval <= 0) throw ConfigError("config: eval_interval must be positive");
  if (eval_episodes < 0) throw ConfigError("config: eval_episodes must be >= 0");
  if (ema_tau < 0.0 || ema_tau > 1.0) throw ConfigError("config: ema_tau must be in [0,1]");
  if (momentum_freq <= 0) throw ConfigError("config: momentum_freq must be positive");
  if (intrinsic_weight < 0.0) throw ConfigError("config: intrinsic_weight must be >= 0");
  if (intrinsic_decay < 0.0) throw ConfigError("config: intrinsic_decay must be >= 0");
  if (discount < 0.0 || discount > 1.0) throw ConfigError("config: discount must be in [0,1]");
  if (contrastive_lr <= 0 || actor_lr <= 0 || critic_lr <= 0 || alpha_lr <= 0) {
    throw ConfigError("config: learning rates must be positive");
  }
  if (crop_size > raw_size) throw ConfigError("config: crop_size larger than raw_size");
  if (crop_size < 15) throw ConfigError("config: crop_size too small for the conv stack");
  if (frame_stack <= 0 || action_repeat <= 0) throw ConfigError("config: stack/repeat must be positive");
  if (similarity != "dot" && similarity != "bilinear") {
    throw ConfigError("config: similarity must be dot or bilinear");
  }
  if (latent_dim <= 0 || action_feature_dim <= 0 || hidden_dim <= 0) {
    throw ConfigError("config: network dimensions must be positive");
  }
  if (init_alpha <= 0.0) throw ConfigError("config: init_alpha must be positive");
  if (critic_tau < 0.0 || critic_tau > 1.0) throw ConfigError("config: critic_tau must be in [0,1]");
  if (actor_update_freq <= 0 || target_update_freq <= 0) {
    throw ConfigError("config: update frequencies must be positive");
  }
  if (checkpoint_interval < 0) throw ConfigError("config: checkpoint_interval must be >= 0");
}

void apply_kv(TrainConfig& c, const std::string& key, const std::string& v) {
  if (key == "env") c.env = v;
  else if (key == "total_steps") c.total_steps = to_i64(key, v);
  else if (key == "seed") c.seed = to_u64(key, v);
  else if (key == "batch_size") c.batch_size = to_i64(key, v);
  else if (key == "replay_capacity") c.replay_capacity = to_i64(key, v);
  else if (key == "warmup_steps") c.warmup_steps = to_i64(key, v);
  else if (key == "eval_interval") c.eval_interval = to_i64(key, v);
  else if (key == "eval_episodes") c.eval_episodes = to_i64(key, v);
  else if (key == "ema_tau") c.ema_tau = to_f64(key, v);
  else if (key == "momentum_freq") c.momentum_freq = to_i64(key, v);
  else if (key == "intrinsic_weight") c.intrinsic_weight = to_f64(key, v);
  else if (key == "intrinsic_decay") c.intrinsic_decay = to_f64(key, v);
  else if (key == "discount") c.discount = to_f64(key, v);
  else if (key == "contrastive_lr") c.contrastive_lr = to_f64(key, v);
  else if (key == "actor_lr") c.actor_lr = to_f64(key, v);
  else if (key == "critic_lr") c.critic_lr = to_f64(key, v);
  else if (key == "alpha_lr") c.alpha_lr = to_f64(key, v);
  else if (key == "raw_size") c.raw_size = to_i64(key, v);
  else if (key == "crop_size") c.crop_size = to_i64(key, v);
  else if (key == "frame_stack") c.frame_stack = to_i64(key, v);
  else if (key == "action_repeat") c.action_repeat = to_i64(key, v);
  else if (key == "similarity") c.similarity = v;
  else if (key == "no_contrastive") c.no_contrastive = to_bool(key, v);
  else if (key == "no_curiosity") c.no_curiosity = to_bool(key, v);
  else if (key == "no_augment") c.no_augment = to_bool(key, v);
  else if (key == "out_dir") c.out_dir = v;
  else if (key == "resume_path") c.resume_path = v;
  else if (key == "trace_path") c.trace_path = v;
  else if (key == "checkpoint_interval") c.checkpoint_interval = to_i64(key, v);
  else if (key == "final_checkpoint") c.final_checkpoint = to_bool(key, v);
  else if (key == "log_wall_time") c.log_wall_time = to_bool(key, v);
  else if (key == "latent_dim") c.latent_dim = to_i64(key, v);
  else if (key == "action_feature_dim") c.action_feature_dim = to_i64(key, v);
  else if (key == "hidden_dim") c.hidden_dim = to_i64(key, v);
  else if (key == "init_alpha") c.init_alpha = to_f64(key, v);
  else if (key == "critic_tau") c.critic_tau = to_f64(key, v);
  else if (key == "actor_update_freq") c.actor_update_freq = to_i64(key, v);
  else if (key == "target_update_freq") c.target_update_freq = to_i64(key, v);
  else throw ConfigError("config: unknown key '" + key + "'");
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  TrainConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key=value");
    }
    apply_kv(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::string render_config(const TrainConfig& c) {
  std::ostringstream os;
  os << "env=" << c.env << "\n"
     << "total_steps=" << c.total_steps << "\n"
     << "seed=" << c.seed << "\n"
     << "batch_size=" << c.batch_size << "\n"
     << "replay_capacity=" << c.replay_capacity << "\n"
     << "warmup_steps=" << c.warmup_steps << "\n"
     << "eval_interval=" << c.eval_interval << "\n"
     << "eval_episodes=" << c.eval_episodes << "\n"
     << "ema_tau=" << fmt(c.ema_tau) << "\n"
     << "momentum_freq=" << c.momentum_freq << "\n"
     << "intrinsic_weight=" << fmt(c.intrinsic_weight) << "\n"
     << "intrinsic_decay=" << fmt(c.intrinsic_decay) << "\n"
     << "discount=" << fmt(c.discount) << "\n"
     << "contrastive_lr=" << fmt(c.contrastive_lr) << "\n"
     << "actor_lr=" << fmt(c.actor_lr) << "\n"
     << "critic_lr=" << fmt(c.critic_lr) << "\n"
     << "alpha_lr=" << fmt(c.alpha_lr) << "\n"
     << "raw_size=" << c.raw_size << "\n"
     << "crop_size=" << c.crop_size << "\n"
     << "frame_stack=" << c.frame_stack << "\n"
     << "action_repeat=" << c.action_repeat << "\n"
     << "similarity=" << c.similarity << "\n"
     << "no_contrastive=" << (c.no_contrastive ? "true" : "false") << "\n"
     << "no_curiosity=" << (c.no_curiosity ? "true" : "false") << "\n"
     << "no_augment=" << (c.no_augment ? "true" : "false") << "\n"
     << "out_dir=" << c.out_dir << "\n"
     << "resume_path=" << c.resume_path << "\n"
     << "trace_path=" << c.trace_path << "\n"
     << "checkpoint_interval=" << c.checkpoint_interval << "\n"
     << "final_checkpoint=" << (c.final_checkpoint ? "true" : "false") << "\n"
     << "log_wall_time=" << (c.log_wall_time ? "true" : "false") << "\n"
     << "latent_dim=" << c.latent_dim << "\n"
     << "action_feature_dim=" << c.action_feature_dim << "\n"
     << "hidden_dim=" << c.hidden_dim << "\n"
     << "init_alpha=" << fmt(c.init_alpha) << "\n"
     << "critic_tau=" << fmt(c.critic_tau) << "\n"
     << "actor_update_freq=" << c.actor_update_freq << "\n"
     << "target_update_freq=" << c.target_update_freq << "\n";
  return os.str();
}

void write_config(const TrainConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("config: cannot write " + path);
  out << render_config(cfg);
}

}  // namespace ccfdm
