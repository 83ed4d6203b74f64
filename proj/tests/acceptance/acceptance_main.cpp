// Acceptance suite. Each criterion prints one PASS/FAIL line; the process
// exits non-zero if any selected criterion fails.
//
// Criteria 7 and 8 train at full scale (40k environment steps, batch 128,
// three seeds per arm). Before committing to the runs the suite measures one
// update and projects the total wall time; with --budget set and the
// projection above it, the criterion fails fast with the projection printed
// instead of hanging for days on undersized hardware.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ccfdm/contrastive.hpp"
#include "ccfdm/curiosity.hpp"
#include "ccfdm/harness.hpp"
#include "ccfdm/nets.hpp"
#include "ccfdm/sac.hpp"
#include "support/gradcheck.hpp"
#include "support/plain_sac.hpp"

using namespace ccfdm;
using ccfdm::testing::GradCheck;
using ccfdm::testing::random_tensor;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::vector<int> criteria;  // empty: all
  double budget_seconds = 0.0;  // 0: unlimited
  int jobs = 0;                 // 0: hardware concurrency
  std::string out_root = "acceptance_out";
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fresh_dir(const Options& opt, const std::string& name) {
  const auto dir = fs::path(opt.out_root) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("acceptance: cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string metrics_body(const std::string& path) {
  const auto all = slurp(path);
  return all.substr(all.find('\n') + 1);
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

char fmtbuf[1024];

// ---------------------------------------------------------------------------
// criterion 1: gradient suite

Outcome criterion1(const Options&) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240001);
  const GradCheck gc;
  const int instances = 20;
  double worst = 0.0;
  std::string worst_op = "none";
  std::size_t total_checked = 0, total_skipped = 0;
  std::size_t checked = 0, skipped = 0;
  auto track = [&](const char* op, double err) {
    total_checked += checked;
    total_skipped += skipped;
    if (err > worst) {
      worst = err;
      worst_op = op;
    }
  };

  for (int i = 0; i < instances; ++i) {
    {  // dense
      ParameterSetT<double> ps;
      std::uniform_int_distribution<int> d(2, 6);
      const std::int64_t fin = d(rng), fout = d(rng), n = d(rng);
      ps.add("w", random_tensor({fout, fin}, rng));
      ps.add("b", random_tensor({fout}, rng));
      ps.add("x", random_tensor({n, fin}, rng));
      track("dense", gc.max_rel_error(
                         [&](TapeT<double>& t) {
                           return mean_all(
                               t, square(t, dense(t, t.param(ps, "x"), t.param(ps, "w"),
                                                  t.param(ps, "b"))));
                         },
                         {&ps}, &checked, &skipped));
    }
    {  // conv2d (both strides)
      ParameterSetT<double> ps;
      ps.add("w", random_tensor({2, 2, 3, 3}, rng));
      ps.add("b", random_tensor({2}, rng));
      ps.add("x", random_tensor({2, 2, 7, 7}, rng));
      const std::int64_t stride = 1 + (i % 2);
      track("conv2d", gc.max_rel_error(
                          [&](TapeT<double>& t) {
                            return mean_all(
                                t, square(t, conv2d(t, t.param(ps, "x"), t.param(ps, "w"),
                                                    t.param(ps, "b"), stride)));
                          },
                          {&ps}, &checked, &skipped));
    }
    {  // activations and elementwise ops
      ParameterSetT<double> ps;
      ps.add("x", random_tensor({3, 5}, rng, -2.0, 2.0));
      ps.add("y", random_tensor({3, 5}, rng, -2.0, 2.0));
      track("activations", gc.max_rel_error(
                               [&](TapeT<double>& t) {
                                 Var x = t.param(ps, "x");
                                 Var y = t.param(ps, "y");
                                 Var a = relu(t, x);
                                 Var b = tanh_op(t, y);
                                 Var c = exp_op(t, mul_const(t, x, 0.5));
                                 Var d = log_op(t, add_const(t, square(t, y), 1.0));
                                 Var e = clamp(t, mul(t, a, b), -0.7, 0.7);
                                 Var f = min_elem(t, c, d);
                                 return mean_all(t, add(t, e, square(t, f)));
                               },
                               {&ps}, &checked, &skipped));
    }
    {  // layer_norm
      ParameterSetT<double> ps;
      ps.add("x", random_tensor({4, 6}, rng));
      ps.add("g", random_tensor({6}, rng, 0.5, 1.5));
      ps.add("b", random_tensor({6}, rng, -0.3, 0.3));
      track("layer_norm", gc.max_rel_error(
                              [&](TapeT<double>& t) {
                                return mean_all(t, square(t, layer_norm(t, t.param(ps, "x"),
                                                                        t.param(ps, "g"),
                                                                        t.param(ps, "b"))));
                              },
                              {&ps}, &checked, &skipped));
    }
    {  // bilinear similarity + InfoNCE over FDM-predicted queries
      ParameterSetT<double> qs;
      qs.add("latents", random_tensor({4, 5}, rng));
      MlpT<double> ae({2, 6, 6, 5}, rng);
      MlpT<double> fdm({10, 6, 6, 5}, rng);
      BilinearWeightT<double> bw(5);
      for (auto& v : bw.params.at("w").value.data) v += 0.05;
      auto actions = random_tensor({4, 2}, rng);
      auto keys = random_tensor({4, 5}, rng);
      track("infonce_fdm", gc.max_rel_error(
                               [&](TapeT<double>& t) {
                                 Var a = ae.forward(t, t.leaf(actions), true);
                                 Var q = t.param(qs, "latents");
                                 Var pred = fdm.forward(t, concat_cols(t, q, a), true);
                                 Var logits = similarity_logits(t, pred, keys,
                                                                SimilarityKind::kBilinear, &bw, true);
                                 return info_nce_loss(t, logits);
                               },
                               {&qs, &ae.params, &fdm.params, &bw.params}, &checked, &skipped));
    }
    {  // SAC losses
      std::mt19937_64 net_rng(900 + i);
      SacAgentT<double> agent(3, 2, 6, 0.13, 1e-3, 1e-3, 1e-3, 0.01, net_rng);
      ParameterSetT<double> lat;
      lat.add("latents", random_tensor({4, 3}, rng));
      auto actions = random_tensor({4, 2}, rng);
      auto y = random_tensor({4, 1}, rng);
      track("critic_loss", gc.max_rel_error(
                               [&](TapeT<double>& t) {
                                 return agent.critic_loss(t, t.param(lat, "latents"), actions, y);
                               },
                               {&agent.critics.params, &lat}, &checked, &skipped));
      auto latents = random_tensor({4, 3}, rng);
      auto noise = normal_tensor<double>({4, 2}, rng);
      track("actor_loss", gc.max_rel_error(
                              [&](TapeT<double>& t) {
                                return agent.actor_loss(t, t.leaf(latents), noise, nullptr);
                              },
                              {&agent.actor.params}, &checked, &skipped));
      auto logp = random_tensor({4, 1}, rng, -3.0, 3.0);
      track("alpha_loss", gc.max_rel_error(
                              [&](TapeT<double>& t) { return agent.alpha_loss(t, logp); },
                              {&agent.alpha.params}, &checked, &skipped));
    }
  }

  const double elapsed = seconds_since(t0);
  const double skip_frac =
      static_cast<double>(total_skipped) / static_cast<double>(total_checked + total_skipped);
  std::snprintf(fmtbuf, sizeof(fmtbuf),
                "max rel err %.3g (worst op: %s), %zu elements checked (%.2f%% near kinks skipped), "
                "%d instances/op, %.1fs (< 120s required)",
                worst, worst_op.c_str(), total_checked, 100.0 * skip_frac, instances, elapsed);
  return {worst <= 1e-4 && elapsed < 120.0 && skip_frac < 0.10, fmtbuf};
}

// ---------------------------------------------------------------------------
// criterion 2: contrastive analytics

Outcome criterion2(const Options&) {
  double worst_delta = 0.0;
  for (std::int64_t k : {2, 8, 128}) {
    TapeT<double> t;
    Var loss = info_nce_loss(t, t.leaf(TensorT<double>::full({k, k}, 1.3)));
    worst_delta = std::max(worst_delta,
                           std::abs(t.value(loss).data[0] - std::log(static_cast<double>(k))));
  }
  double k1_loss;
  {
    TapeT<double> t;
    k1_loss = t.value(info_nce_loss(t, t.leaf(TensorT<double>::full({1, 1}, 2.7)))).data[0];
  }

  // key-gradient identically zero through the full encoder pipeline
  std::mt19937_64 rng(42);
  PixelEncoderT<double> qe(2, 16, 16, 8, rng);
  PixelEncoderT<double> ke(2, 16, 16, 8, rng);
  copy_values(ke.params, qe.params);
  auto obs_q = random_tensor({4, 2, 16, 16}, rng, 0.0, 1.0);
  auto obs_k = random_tensor({4, 2, 16, 16}, rng, 0.0, 1.0);
  qe.params.zero_grads();
  ke.params.zero_grads();
  TapeT<double> t;
  Var q = qe.forward(t, obs_q, true);
  auto keys = t.value(ke.forward(t, obs_k, false));
  t.backward(info_nce_loss(t, similarity_logits<double>(t, q, keys, SimilarityKind::kDot, nullptr, true)));
  const bool key_grads_zero = ke.params.grads_all_zero();
  const bool query_grads_flow = !qe.params.grads_all_zero();

  std::snprintf(fmtbuf, sizeof(fmtbuf),
                "uniform-batch |loss - ln K| <= %.3g (<= 1e-9), K=1 loss %.3g, key grads %s",
                worst_delta, k1_loss, key_grads_zero ? "all zero" : "NONZERO");
  return {worst_delta <= 1e-9 && k1_loss == 0.0 && key_grads_zero && query_grads_flow, fmtbuf};
}

// ---------------------------------------------------------------------------
// criterion 3: EMA law

Outcome criterion3(const Options&) {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (double tau : {0.01, 0.5, 1.0}) {
    ParameterSetT<double> src, tgt;
    src.add("w", random_tensor({32}, rng, -2.0, 2.0));
    tgt.add("w", random_tensor({32}, rng, -2.0, 2.0));
    std::vector<double> gap0(32);
    for (int i = 0; i < 32; ++i) {
      gap0[static_cast<std::size_t>(i)] =
          std::abs(tgt.at("w").value.data[static_cast<std::size_t>(i)] -
                   src.at("w").value.data[static_cast<std::size_t>(i)]);
    }
    for (int n = 1; n <= 64; ++n) {
      ema_blend(tgt, src, tau);
      const double factor = std::pow(1.0 - tau, n);
      for (int i = 0; i < 32; ++i) {
        const double gap = std::abs(tgt.at("w").value.data[static_cast<std::size_t>(i)] -
                                    src.at("w").value.data[static_cast<std::size_t>(i)]);
        worst = std::max(worst, std::abs(gap - factor * gap0[static_cast<std::size_t>(i)]));
      }
    }
  }
  std::snprintf(fmtbuf, sizeof(fmtbuf),
                "max |gap_n - (1-tau)^n gap_0| = %.3g over tau in {0.01,0.5,1.0}, n<=64 (<= 1e-12)",
                worst);
  return {worst <= 1e-12, fmtbuf};
}

// ---------------------------------------------------------------------------
// criterion 4: curiosity law

TrainConfig mini_config(const Options& opt, const std::string& name) {
  TrainConfig cfg;
  cfg.env = "pendulum";
  cfg.total_steps = 500;
  cfg.warmup_steps = 200;
  cfg.batch_size = 8;
  cfg.replay_capacity = 2000;
  cfg.eval_interval = 250;
  cfg.eval_episodes = 1;
  cfg.raw_size = 40;
  cfg.crop_size = 36;
  cfg.frame_stack = 2;
  cfg.out_dir = name;
  cfg.log_wall_time = false;
  cfg.final_checkpoint = false;
  (void)opt;
  return cfg;
}

Outcome criterion4(const Options& opt) {
  CuriosityState s;
  s.re_max = 1.0;
  s.ri_max = 1.0;
  s.step = 0;
  const double r0 = intrinsic_reward(s, 0.7);

  double worst_ratio = 0.0;
  for (std::uint64_t t : {1ull, 10ull, 100ull, 1000ull, 34657ull, 100000ull, 1000000ull}) {
    s.step = t;
    const double ratio = intrinsic_reward(s, 0.7) / r0;
    worst_ratio = std::max(worst_ratio,
                           std::abs(ratio - std::exp(-2e-5 * static_cast<double>(t))));
  }

  std::uint64_t half_step = 0;
  for (std::uint64_t t = 34000; t < 36000; ++t) {
    s.step = t;
    if (intrinsic_reward(s, 0.7) <= 0.5 * r0) {
      half_step = t;
      break;
    }
  }
  const double half_target = std::log(2.0) / 2e-5;
  const bool half_ok = std::abs(static_cast<double>(half_step) - half_target) <= 1.0;

  auto zero_c = mini_config(opt, fresh_dir(opt, "c4_zero_weight"));
  zero_c.intrinsic_weight = 0.0;
  zero_c.trace_path = zero_c.out_dir + "/trace.csv";
  auto ablated = mini_config(opt, fresh_dir(opt, "c4_no_curiosity"));
  ablated.no_curiosity = true;
  ablated.trace_path = ablated.out_dir + "/trace.csv";
  run_training(zero_c);
  run_training(ablated);
  const bool traces_equal = slurp(zero_c.trace_path) == slurp(ablated.trace_path);

  std::snprintf(fmtbuf, sizeof(fmtbuf),
                "decay ratio err %.3g (<=1e-12), half-life %llu vs %.2f (+-1), C=0 trace %s",
                worst_ratio, static_cast<unsigned long long>(half_step), half_target,
                traces_equal ? "== ablation" : "DIFFERS");
  return {worst_ratio <= 1e-12 && half_ok && traces_equal, fmtbuf};
}

// ---------------------------------------------------------------------------
// criterion 5: reduction contract

Outcome criterion5(const Options& opt) {
  auto flagged = mini_config(opt, fresh_dir(opt, "c5_flagged"));
  flagged.no_contrastive = true;
  flagged.no_curiosity = true;
  flagged.no_augment = true;
  flagged.trace_path = flagged.out_dir + "/trace.csv";
  auto res = run_training(flagged);

  auto oracle = flagged;
  oracle.out_dir = fresh_dir(opt, "c5_oracle");
  oracle.trace_path = oracle.out_dir + "/trace.csv";
  ccfdm::testing::plain_pixel_sac_run(oracle);

  const bool metrics_equal = slurp(res.metrics_path) == slurp(oracle.out_dir + "/metrics.csv");
  const bool traces_equal = slurp(flagged.trace_path) == slurp(oracle.trace_path);
  std::snprintf(fmtbuf, sizeof(fmtbuf), "metrics %s, update-input traces %s vs plain pixel-SAC",
                metrics_equal ? "identical" : "DIFFER", traces_equal ? "identical" : "DIFFER");
  return {metrics_equal && traces_equal, fmtbuf};
}

// ---------------------------------------------------------------------------
// criterion 6: determinism and resume

Outcome criterion6(const Options& opt) {
  auto a = mini_config(opt, fresh_dir(opt, "c6_a"));
  auto b = mini_config(opt, fresh_dir(opt, "c6_b"));
  auto ra = run_training(a);
  auto rb = run_training(b);
  const bool identical = slurp(ra.metrics_path) == slurp(rb.metrics_path);

  auto half = mini_config(opt, fresh_dir(opt, "c6_half"));
  half.total_steps = 260;  // mid-episode
  half.final_checkpoint = true;
  auto rh = run_training(half);
  auto rest = mini_config(opt, fresh_dir(opt, "c6_rest"));
  rest.resume_path = rh.checkpoint_path;
  auto rr = run_training(rest);
  const bool resume_ok =
      metrics_body(ra.metrics_path) == metrics_body(rh.metrics_path) + metrics_body(rr.metrics_path);

  std::snprintf(fmtbuf, sizeof(fmtbuf), "identical seeds -> metrics bytes %s; midpoint resume %s",
                identical ? "identical" : "DIFFER", resume_ok ? "reproduces the full run" : "DIVERGES");
  return {identical && resume_ok, fmtbuf};
}

// ---------------------------------------------------------------------------
// criteria 7/8: learning at full scale

TrainConfig full_scale_config(const std::string& env, std::uint64_t seed, const std::string& out) {
  TrainConfig cfg;
  cfg.env = env;
  cfg.total_steps = 40000;
  cfg.batch_size = 128;
  cfg.warmup_steps = 1000;
  cfg.eval_interval = 10000;
  cfg.eval_episodes = 10;
  cfg.seed = seed;
  cfg.out_dir = out;
  cfg.final_checkpoint = false;
  cfg.log_wall_time = true;
  return cfg;
}

// Measures warmup and per-update cost of cfg at its true scale.
std::pair<double, double> probe_run_cost(const Options& opt, TrainConfig cfg) {
  cfg.eval_episodes = 0;
  cfg.final_checkpoint = false;
  cfg.out_dir = fresh_dir(opt, "probe_warmup");
  cfg.total_steps = cfg.warmup_steps;
  auto t0 = Clock::now();
  run_training(cfg);
  const double warmup_s = seconds_since(t0);

  cfg.out_dir = fresh_dir(opt, "probe_updates");
  cfg.total_steps = cfg.warmup_steps + 6;
  t0 = Clock::now();
  run_training(cfg);
  const double per_update = (seconds_since(t0) - warmup_s) / 6.0;
  return {warmup_s, per_update};
}

struct RunSpec {
  TrainConfig cfg;
  double final_eval = 0.0;
};

// Runs the specs, --jobs at a time; each run is fully independent.
void run_parallel(std::vector<RunSpec>& specs, int jobs) {
  const int n = static_cast<int>(specs.size());
  const int workers = std::max(1, std::min(jobs, n));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        auto res = run_training(specs[static_cast<std::size_t>(i)].cfg);
        specs[static_cast<std::size_t>(i)].final_eval = res.final_eval_mean;
      }
    });
  }
  for (auto& t : pool) t.join();
}

Outcome learning_criterion(const Options& opt, const std::string& env, bool ablate_curiosity_only) {
  const int jobs = opt.jobs > 0 ? opt.jobs
                                : std::max(1u, std::thread::hardware_concurrency());
  auto [warmup_s, per_update] = probe_run_cost(opt, full_scale_config(env, 1, ""));
  const double per_run = warmup_s + per_update * 39000.0 + 60.0;  // evals and I/O margin
  const double projected = per_run * 6.0 / jobs;
  std::printf("  [info] %s: measured %.2fs/update; projected %.1fh for 6 runs at %d job(s)\n",
              env.c_str(), per_update, projected / 3600.0, jobs);
  if (opt.budget_seconds > 0.0 && projected > opt.budget_seconds) {
    std::snprintf(fmtbuf, sizeof(fmtbuf),
                  "projected %.1fh exceeds the %.1fh budget on this machine (%.2fs/update, %d job(s)); "
                  "run the acceptance binary with --budget 0 on capable hardware",
                  projected / 3600.0, opt.budget_seconds / 3600.0, per_update, jobs);
    return {false, fmtbuf};
  }

  std::vector<RunSpec> specs;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    RunSpec spec;
    spec.cfg = full_scale_config(env, seed, fresh_dir(opt, env + "_full_s" + std::to_string(seed)));
    specs.push_back(spec);
  }
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    RunSpec spec;
    spec.cfg = full_scale_config(env, seed, fresh_dir(opt, env + "_abl_s" + std::to_string(seed)));
    if (ablate_curiosity_only) {
      spec.cfg.no_curiosity = true;
    } else {
      spec.cfg.no_contrastive = true;
      spec.cfg.no_curiosity = true;
      spec.cfg.no_augment = true;
    }
    specs.push_back(spec);
  }
  run_parallel(specs, jobs);

  const double full_median = median3({specs[0].final_eval, specs[1].final_eval, specs[2].final_eval});
  const double abl_median = median3({specs[3].final_eval, specs[4].final_eval, specs[5].final_eval});

  if (!ablate_curiosity_only) {
    const double baseline = Trainer::random_baseline(specs[0].cfg, 20, 1234);
    const bool pass = full_median >= 3.0 * baseline && full_median >= abl_median;
    std::snprintf(fmtbuf, sizeof(fmtbuf),
                  "median %.1f vs 3x random baseline %.1f and pixel-SAC median %.1f",
                  full_median, 3.0 * baseline, abl_median);
    return {pass, fmtbuf};
  }
  const bool exceeds = full_median > abl_median;
  const bool pass = full_median >= 0.8 * abl_median;
  std::snprintf(fmtbuf, sizeof(fmtbuf),
                "median %.1f vs no-curiosity median %.1f (strictly exceeds: %s; fail only below 0.8x)",
                full_median, abl_median, exceeds ? "yes" : "no");
  return {pass, fmtbuf};
}

Outcome criterion7(const Options& opt) { return learning_criterion(opt, "pendulum", false); }
Outcome criterion8(const Options& opt) { return learning_criterion(opt, "pointmass", true); }

// ---------------------------------------------------------------------------
// criterion 9: FDM sanity (overfit one fixed batch)

Outcome criterion9(const Options&) {
  using R = Real;
  const std::int64_t k = 16, raw = 76, crop = 68, stack = 3, dz = 50, da = 50;

  // one fixed batch of real transitions from a random pendulum rollout
  PendulumEnv env(raw, stack, 4);
  std::mt19937_64 rng(314159);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto obs = env.reset(rng());
  std::vector<Transition> batch;
  for (std::int64_t i = 0; i < k; ++i) {
    Transition t;
    t.obs = obs;
    t.action = {uni(rng)};
    auto r = env.step(t.action);
    t.next_obs = r.obs;
    t.reward = r.reward;
    batch.push_back(t);
    obs = r.obs;
  }

  auto obs_q = TensorT<R>::zeros({k, stack, crop, crop});
  auto obs_k = TensorT<R>::zeros({k, stack, crop, crop});
  auto actions = TensorT<R>::zeros({k, 1});
  for (std::int64_t j = 0; j < k; ++j) {
    auto [qt, ql] = crop_offsets(raw, raw, crop, crop, rng);
    auto [kt, kl] = crop_offsets(raw, raw, crop, crop, rng);
    crop_stack_into(obs_q.data.data() + j * stack * crop * crop, batch[j].obs.data(), stack, raw,
                    raw, qt, ql, crop, crop);
    crop_stack_into(obs_k.data.data() + j * stack * crop * crop, batch[j].next_obs.data(), stack,
                    raw, raw, kt, kl, crop, crop);
    actions(j, 0) = static_cast<R>(batch[j].action[0]);
  }

  PixelEncoderT<R> qe(stack, crop, crop, dz, rng);
  PixelEncoderT<R> ke(stack, crop, crop, dz, rng);
  copy_values(ke.params, qe.params);
  MlpT<R> ae({1, 50, 50, da}, rng);
  MlpT<R> fdm({dz + da, 50, 50, dz}, rng);
  auto ae_adam = AdamStateT<R>::for_params(ae.params, 1e-3);
  auto fdm_adam = AdamStateT<R>::for_params(fdm.params, 1e-3);

  TensorT<R> queries, keys;
  {
    TapeT<R> t;
    queries = t.value(qe.forward(t, obs_q, false));
  }
  {
    TapeT<R> t;
    keys = t.value(ke.forward(t, obs_k, false));
  }

  auto mean_err = [&]() {
    TapeT<R> t;
    Var a = ae.forward(t, t.leaf(actions), false);
    Var pred = fdm.forward(t, concat_cols(t, t.leaf(queries), a), false);
    const auto& pv = t.value(pred);
    double acc = 0.0;
    for (std::int64_t j = 0; j < k; ++j) {
      acc += prediction_error(pv.data.data() + j * dz, keys.data.data() + j * dz, dz);
    }
    return acc / static_cast<double>(k);
  };

  const double e0 = mean_err();
  for (int step = 0; step < 500; ++step) {
    ae.params.zero_grads();
    fdm.params.zero_grads();
    TapeT<R> t;
    Var a = ae.forward(t, t.leaf(actions), true);
    Var pred = fdm.forward(t, concat_cols(t, t.leaf(queries), a), true);
    Var loss = mean_all(t, sum_rows(t, square(t, sub(t, pred, t.leaf(keys)))));
    t.backward(loss);
    adam_step(ae.params, ae_adam);
    adam_step(fdm.params, fdm_adam);
  }
  const double e1 = mean_err();
  std::snprintf(fmtbuf, sizeof(fmtbuf),
                "mean prediction error %.4f -> %.4f after 500 steps (%.1fx reduction, >= 10x required)",
                e0, e1, e0 / e1);
  return {e0 / e1 >= 10.0, fmtbuf};
}

// ---------------------------------------------------------------------------
// criterion 10: environment physics

Outcome criterion10(const Options&) {
  double worst_energy = 0.0;
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    PendulumEnv env(76, 1, 4, /*damping=*/0.0);
    env.reset(seed);
    const double e0 = env.energy();
    while (!env.episode_done()) {
      env.step({0.0});
      worst_energy = std::max(worst_energy,
                              std::abs(env.energy() - e0) / std::max(e0, 0.1));
    }
  }

  bool render_ok = true;
  for (const char* name : {"pendulum", "pointmass"}) {
    auto a = make_env(name, 76, 2, 4);
    auto b = make_env(name, 76, 2, 4);
    if (a->reset(99) != b->reset(99)) render_ok = false;
    if (a->render() != a->render()) render_ok = false;
    std::stringstream state;
    a->save_state(state);
    a->step(std::vector<double>(static_cast<std::size_t>(a->action_dim()), 0.3));
    std::stringstream restore(state.str());
    a->load_state(restore);
    if (a->render() != b->render()) render_ok = false;
  }

  std::snprintf(fmtbuf, sizeof(fmtbuf),
                "max unforced-undamped energy drift %.4f%% (<= 1%%); renders %s",
                100.0 * worst_energy, render_ok ? "bit-exact" : "NOT bit-exact");
  return {worst_energy <= 0.01 && render_ok, fmtbuf};
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::fprintf(stderr, "missing value for %s\n", arg.c_str());
        std::exit(2);
      }
      return argv[++i];
    };
    if (arg == "--criterion") {
      std::stringstream ss(next());
      std::string tok;
      while (std::getline(ss, tok, ',')) opt.criteria.push_back(std::stoi(tok));
    } else if (arg == "--budget") {
      opt.budget_seconds = std::stod(next());
    } else if (arg == "--jobs") {
      opt.jobs = std::stoi(next());
    } else if (arg == "--out") {
      opt.out_root = next();
    } else {
      std::fprintf(stderr, "unknown argument: %s\n", arg.c_str());
      return 2;
    }
  }
  if (opt.criteria.empty()) opt.criteria = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  struct Entry {
    int id;
    const char* title;
    Outcome (*fn)(const Options&);
  };
  const Entry entries[] = {
      {1, "gradient suite vs central finite differences", criterion1},
      {2, "contrastive analytics (ln K, K=1, key gradients)", criterion2},
      {3, "EMA geometric decay law", criterion3},
      {4, "curiosity decay law, half-life, C=0 reduction", criterion4},
      {5, "ablation flags reduce to plain pixel-SAC", criterion5},
      {6, "bitwise determinism and midpoint resume", criterion6},
      {7, "learning, dense reward (pendulum, 40k steps, 3 seeds)", criterion7},
      {8, "learning, sparse reward (point-mass, 40k steps, 3 seeds)", criterion8},
      {9, "FDM sanity: overfit one fixed batch 500 steps", criterion9},
      {10, "environment physics: energy conservation, render determinism", criterion10},
  };

  int failures = 0;
  for (const auto& e : entries) {
    if (std::find(opt.criteria.begin(), opt.criteria.end(), e.id) == opt.criteria.end()) continue;
    Outcome out;
    try {
      out = e.fn(opt);
    } catch (const std::exception& ex) {
      out = {false, std::string("exception: ") + ex.what()};
    }
    std::printf("[%s] criterion %d: %s — %s\n", out.pass ? "PASS" : "FAIL", e.id, e.title,
                out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
