#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ccfdm/contrastive.hpp"
#include "ccfdm/curiosity.hpp"
#include "ccfdm/nets.hpp"
#include "ccfdm/sac.hpp"
#include "support/gradcheck.hpp"

using namespace ccfdm;
using ccfdm::testing::GradCheck;
using ccfdm::testing::random_tensor;

namespace {

TensorT<double> latent_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> flat;
  std::int64_t cols = -1;
  std::int64_t n = 0;
  for (const auto& r : rows) {
    cols = static_cast<std::int64_t>(r.size());
    for (double v : r) flat.push_back(v);
    ++n;
  }
  return TensorT<double>({n, cols}, std::move(flat));
}

}  // namespace

// ---------------------------------------------------------------------------
// encoders

TEST_CASE("encoder: deterministic and latent dimension as configured") {
  std::mt19937_64 rng(5);
  PixelEncoderT<double> enc(2, 16, 16, 10, rng);
  auto obs = random_tensor({3, 2, 16, 16}, rng, 0.0, 1.0);
  auto a = enc.encode(obs);
  auto b = enc.encode(obs);
  CHECK(a.shape == std::vector<std::int64_t>{3, 10});
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("encoder: all-zero observation still yields finite latent") {
  std::mt19937_64 rng(6);
  PixelEncoderT<double> enc(1, 16, 16, 6, rng);
  auto z = enc.encode(TensorT<double>::zeros({1, 1, 16, 16}));
  CHECK(z.all_finite());
}

TEST_CASE("encoder: wrong input shape raises configuration error") {
  std::mt19937_64 rng(7);
  PixelEncoderT<double> enc(2, 16, 16, 10, rng);
  TapeT<double> t;
  CHECK_THROWS_AS(enc.forward(t, TensorT<double>::zeros({1, 2, 13, 16}), true), ConfigError);
}

TEST_CASE("key encoder: copy of query encoder gives identical outputs") {
  std::mt19937_64 rng(8);
  PixelEncoderT<double> qe(2, 16, 16, 8, rng);
  PixelEncoderT<double> ke(2, 16, 16, 8, rng);
  copy_values(ke.params, qe.params);
  auto obs = random_tensor({2, 2, 16, 16}, rng, 0.0, 1.0);
  auto a = qe.encode(obs);
  auto b = ke.encode(obs);
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("key encoder: untouched by query-encoder gradient steps until synced") {
  std::mt19937_64 rng(9);
  PixelEncoderT<double> qe(1, 16, 16, 6, rng);
  PixelEncoderT<double> ke(1, 16, 16, 6, rng);
  copy_values(ke.params, qe.params);
  auto obs = random_tensor({2, 1, 16, 16}, rng, 0.0, 1.0);
  auto before = ke.encode(obs);

  auto adam = AdamStateT<double>::for_params(qe.params, 1e-2);
  for (int i = 0; i < 3; ++i) {
    qe.params.zero_grads();
    TapeT<double> t;
    Var lat = qe.forward(t, obs, true);
    t.backward(mean_all(t, square(t, lat)));
    adam_step(qe.params, adam);
  }
  auto after = ke.encode(obs);
  for (std::size_t i = 0; i < before.data.size(); ++i) CHECK(before.data[i] == after.data[i]);

  // tau=1 momentum sync makes the key encoder coincide with the query encoder
  ema_blend(ke.params, qe.params, 1.0);
  auto synced = ke.encode(obs);
  auto target = qe.encode(obs);
  for (std::size_t i = 0; i < synced.data.size(); ++i) CHECK(synced.data[i] == target.data[i]);
}

TEST_CASE("key encoder: zero gradient through the stop-gradient path") {
  std::mt19937_64 rng(10);
  PixelEncoderT<double> qe(1, 16, 16, 6, rng);
  PixelEncoderT<double> ke(1, 16, 16, 6, rng);
  copy_values(ke.params, qe.params);
  auto obs_q = random_tensor({3, 1, 16, 16}, rng, 0.0, 1.0);
  auto obs_k = random_tensor({3, 1, 16, 16}, rng, 0.0, 1.0);

  qe.params.zero_grads();
  ke.params.zero_grads();
  TapeT<double> t;
  Var q = qe.forward(t, obs_q, true);
  TensorT<double> keys = t.value(ke.forward(t, obs_k, false));
  Var logits = similarity_logits<double>(t, q, keys, SimilarityKind::kDot, nullptr, true);
  t.backward(info_nce_loss(t, logits));

  CHECK(ke.params.grads_all_zero());
  CHECK_FALSE(qe.params.grads_all_zero());
}

TEST_CASE("mlp: hidden ReLU layers and configured output width") {
  std::mt19937_64 rng(11);
  MlpT<double> mlp({3, 50, 50, 50}, rng);
  TapeT<double> t;
  Var x = t.leaf(random_tensor({4, 3}, rng));
  Var y = mlp.forward(t, x, false);
  CHECK(t.value(y).shape == std::vector<std::int64_t>{4, 50});
  CHECK(t.value(y).all_finite());
}

TEST_CASE("action embedding gradient flows under the contrastive loss") {
  std::mt19937_64 rng(12);
  MlpT<double> ae({2, 8, 8, 6}, rng);   // action embedding
  MlpT<double> fdm({12, 8, 8, 6}, rng); // dynamics model over (latent, action feature)
  auto latents = random_tensor({4, 6}, rng);
  auto actions = random_tensor({4, 2}, rng);
  auto keys = random_tensor({4, 6}, rng);

  GradCheck gc;
  double err = gc.max_rel_error(
      [&](TapeT<double>& t) {
        Var a = ae.forward(t, t.leaf(actions), true);
        Var q = t.leaf(latents);
        Var pred = fdm.forward(t, concat_cols(t, q, a), true);
        Var logits = similarity_logits<double>(t, pred, keys, SimilarityKind::kDot, nullptr, true);
        return info_nce_loss(t, logits);
      },
      {&ae.params, &fdm.params});
  CHECK(err < 1e-4);

  ae.params.zero_grads();
  fdm.params.zero_grads();
  TapeT<double> t;
  Var a = ae.forward(t, t.leaf(actions), true);
  Var pred = fdm.forward(t, concat_cols(t, t.leaf(latents), a), true);
  Var logits = similarity_logits<double>(t, pred, keys, SimilarityKind::kDot, nullptr, true);
  t.backward(info_nce_loss(t, logits));
  CHECK_FALSE(ae.params.grads_all_zero());
}

// ---------------------------------------------------------------------------
// contrastive

TEST_CASE("similarity: orthogonal dot is zero, hand inner product is 11") {
  auto q1 = TensorT<double>({2}, {1.0, 0.0});
  auto k1 = TensorT<double>({2}, {0.0, 1.0});
  CHECK(similarity<double>(q1, k1, SimilarityKind::kDot) == 0.0);
  auto q2 = TensorT<double>({2}, {1.0, 2.0});
  auto k2 = TensorT<double>({2}, {3.0, 4.0});
  CHECK(similarity<double>(q2, k2, SimilarityKind::kDot) == doctest::Approx(11.0));
}

TEST_CASE("similarity: bilinear with identity weight reduces to dot") {
  std::mt19937_64 rng(13);
  BilinearWeightT<double> bw(5);
  auto q = random_tensor({5}, rng);
  auto k = random_tensor({5}, rng);
  CHECK(similarity(q, k, SimilarityKind::kBilinear, &bw) ==
        doctest::Approx(similarity<double>(q, k, SimilarityKind::kDot)).epsilon(1e-12));
}

TEST_CASE("similarity: dimension mismatch raises configuration error") {
  auto q = TensorT<double>({2}, {1.0, 0.0});
  auto k = TensorT<double>({3}, {0.0, 1.0, 0.0});
  CHECK_THROWS_AS(similarity<double>(q, k, SimilarityKind::kDot), ConfigError);
}

TEST_CASE("info_nce: uniform similarities give ln K, single pair gives zero") {
  for (std::int64_t k : {1, 2, 8, 128}) {
    TapeT<double> t;
    Var logits = t.leaf(TensorT<double>::full({k, k}, 0.7), true);
    Var loss = info_nce_loss(t, logits);
    const double expected = k == 1 ? 0.0 : std::log(static_cast<double>(k));
    CHECK(std::abs(t.value(loss).data[0] - expected) < 1e-9);
  }
}

TEST_CASE("info_nce: hand softmax evaluation for K=2") {
  // s(q1,k1)=2, s(q1,k2)=0, s(q2,k2)=2, s(q2,k1)=0 -> -ln(e^2/(e^2+1))
  TapeT<double> t;
  Var logits = t.leaf(latent_rows({{2.0, 0.0}, {0.0, 2.0}}));
  Var loss = info_nce_loss(t, logits);
  CHECK(t.value(loss).data[0] == doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-12));
  CHECK(t.value(loss).data[0] == doctest::Approx(0.1269).epsilon(1e-3));
}

TEST_CASE("info_nce: non-negative and shift invariant per query") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    auto base = random_tensor({6, 6}, rng, -3.0, 3.0);
    TapeT<double> t;
    double l0 = t.value(info_nce_loss(t, t.leaf(base))).data[0];
    CHECK(l0 >= 0.0);

    auto shifted = base;
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (std::int64_t i = 0; i < 6; ++i) {
      const double c = dist(rng);
      for (std::int64_t j = 0; j < 6; ++j) shifted(i, j) += c;
    }
    TapeT<double> t2;
    double l1 = t2.value(info_nce_loss(t2, t2.leaf(shifted))).data[0];
    CHECK(l1 == doctest::Approx(l0).epsilon(1e-9));
  }
}

TEST_CASE("info_nce: invariant to permuting a query's negatives") {
  std::mt19937_64 rng(19);
  auto base = random_tensor({5, 5}, rng, -2.0, 2.0);
  TapeT<double> t;
  double l0 = t.value(info_nce_loss(t, t.leaf(base))).data[0];

  // permute the off-diagonal entries of row 2 (its negatives)
  auto perm = base;
  std::swap(perm(2, 0), perm(2, 4));
  std::swap(perm(2, 1), perm(2, 3));
  TapeT<double> t2;
  double l1 = t2.value(info_nce_loss(t2, t2.leaf(perm))).data[0];
  CHECK(l1 == doctest::Approx(l0).epsilon(1e-12));
}

TEST_CASE("info_nce: larger positive margin strictly decreases the loss") {
  TapeT<double> t;
  double prev = t.value(info_nce_loss(t, t.leaf(latent_rows({{0.0, 0.0}, {0.0, 0.0}})))).data[0];
  for (double m : {0.5, 1.0, 2.0, 4.0}) {
    TapeT<double> ti;
    double cur = ti.value(info_nce_loss(ti, ti.leaf(latent_rows({{m, 0.0}, {0.0, m}})))).data[0];
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("info_nce: non-finite similarity aborts with diagnostic") {
  TapeT<double> t;
  auto bad = TensorT<double>::full({2, 2}, 1.0);
  bad.data[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(info_nce_loss(t, t.leaf(bad)), NumericsError);
}

TEST_CASE("info_nce: gradcheck through bilinear similarity and weight") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 5; ++rep) {
    ParameterSetT<double> qp;
    qp.add("q", random_tensor({4, 5}, rng));
    BilinearWeightT<double> bw(5);
    // nudge W off the identity so the check is not at a special point
    for (auto& v : bw.params.at("w").value.data) v += 0.01 * static_cast<double>(rep);
    auto keys = random_tensor({4, 5}, rng);
    GradCheck gc;
    double err = gc.max_rel_error(
        [&](TapeT<double>& t) {
          Var q = t.param(qp, "q");
          Var logits = similarity_logits(t, q, keys, SimilarityKind::kBilinear, &bw, true);
          return info_nce_loss(t, logits);
        },
        {&qp, &bw.params});
    CHECK(err < 1e-4);
  }
}

// ---------------------------------------------------------------------------
// curiosity

TEST_CASE("prediction_error: hand values and symmetry") {
  auto a = TensorT<double>({2}, {1.0, 0.0});
  auto b = TensorT<double>({2}, {0.0, 1.0});
  CHECK(prediction_error(a, a) == 0.0);
  CHECK(prediction_error(a, b) == doctest::Approx(2.0));
  CHECK(prediction_error(a, b) == prediction_error(b, a));
}

TEST_CASE("intrinsic_reward: formula at t=0 with unit normalization") {
  CuriosityState s;
  s.re_max = 1.0;
  s.ri_max = 1.0;
  s.step = 0;
  CHECK(intrinsic_reward(s, 1.0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(intrinsic_reward(s, 0.0) == 0.0);
}

TEST_CASE("intrinsic_reward: decay half-life at gamma=2e-5 is ~34657 steps") {
  CuriosityState s;
  s.re_max = 1.0;
  s.ri_max = 1.0;
  s.step = 0;
  const double r0 = intrinsic_reward(s, 1.0);
  std::uint64_t t = 0;
  while (true) {
    s.step = ++t;
    if (intrinsic_reward(s, 1.0) <= 0.5 * r0) break;
  }
  CHECK(std::abs(static_cast<double>(t) - std::log(2.0) / 2e-5) <= 1.0);
}

TEST_CASE("intrinsic_reward: degenerate normalizers return zero by contract") {
  CuriosityState s;
  s.re_max = 0.0;
  s.ri_max = 1.0;
  CHECK(intrinsic_reward(s, 3.0) == 0.0);
  s.re_max = 1.0;
  s.ri_max = 1e-9;  // below guard
  CHECK(intrinsic_reward(s, 3.0) == 0.0);
}

TEST_CASE("update_maxima: running maxima never decrease") {
  CuriosityState s;
  update_maxima(s, 5.0, 0.1);
  update_maxima(s, 3.0, 0.05);
  CHECK(s.re_max == 5.0);
  CHECK(s.ri_max == doctest::Approx(0.1));
  update_maxima(s, -7.0, 0.0);  // |r_e| used
  CHECK(s.re_max == 7.0);
}

TEST_CASE("update_maxima: fresh state scale factor example") {
  CuriosityState s;
  update_maxima(s, 2.0, 4.0);
  CHECK(s.re_max == 2.0);
  CHECK(s.ri_max == 4.0);
  CHECK(s.re_max / s.ri_max == doctest::Approx(0.5));
}

TEST_CASE("intrinsic_reward: strictly decreasing in t and bounded by C*re_max") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> dist(0.0, 10.0);
  for (int rep = 0; rep < 50; ++rep) {
    CuriosityState s;
    s.re_max = dist(rng) + 0.1;
    s.ri_max = dist(rng) + 0.1;
    const double err = dist(rng) * s.ri_max / 10.0;  // raw error <= ri_max
    double prev = std::numeric_limits<double>::infinity();
    for (std::uint64_t t : {0ull, 10ull, 1000ull, 100000ull, 10000000ull}) {
      s.step = t;
      const double r = intrinsic_reward(s, err);
      CHECK(r <= 0.2 * s.re_max + 1e-15);
      CHECK(r < prev);
      prev = r;
    }
    s.step = 1000000000ull;
    CHECK(intrinsic_reward(s, err) < 1e-8);
  }
}

TEST_CASE("intrinsic weight zero silences the reward exactly") {
  CuriosityState s;
  s.intrinsic_weight = 0.0;
  s.re_max = 3.0;
  s.ri_max = 2.0;
  s.step = 17;
  CHECK(intrinsic_reward(s, 1.7) == 0.0);
}

// ---------------------------------------------------------------------------
// sac

TEST_CASE("actor: actions stay in [-1,1] and deterministic mode repeats") {
  std::mt19937_64 rng(31);
  SacActorT<double> actor(6, 2, 16, rng);
  auto latents = random_tensor({32, 6}, rng, -2.0, 2.0);
  auto noise = normal_tensor<double>({32, 2}, rng);
  auto acts = actor.act(latents, &noise, false);
  for (double v : acts.data) {
    CHECK(v <= 1.0);
    CHECK(v >= -1.0);
  }
  auto d1 = actor.act(latents, nullptr, true);
  auto d2 = actor.act(latents, nullptr, true);
  for (std::size_t i = 0; i < d1.data.size(); ++i) CHECK(d1.data[i] == d2.data[i]);
}

TEST_CASE("actor: empirical mean of stochastic samples near zero at mean=0") {
  std::mt19937_64 rng(37);
  SacActorT<double> actor(4, 1, 8, rng);
  // zero the mean head so the pre-squash mean is exactly 0
  for (auto& v : actor.params.at("mean.w").value.data) v = 0.0;
  for (auto& v : actor.params.at("mean.b").value.data) v = 0.0;
  auto latents = random_tensor({1, 4}, rng);
  const int n = 10000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    auto noise = normal_tensor<double>({1, 1}, rng);
    const double a = actor.act(latents, &noise, false).data[0];
    sum += a;
    sumsq += a * a;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sumsq / n - mean * mean) / n);
  CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("sac: terminal transitions bootstrap nothing (target = r)") {
  std::mt19937_64 rng(41);
  SacAgentT<double> agent(4, 2, 8, 0.1, 1e-3, 1e-3, 1e-3, 0.01, rng);
  auto next_latents = random_tensor({3, 4}, rng);
  auto noise = normal_tensor<double>({3, 2}, rng);
  auto y = agent.compute_targets(next_latents, noise, {1.0, -2.0, 0.25}, {1, 1, 1}, 0.99);
  CHECK(y(0, 0) == doctest::Approx(1.0));
  CHECK(y(1, 0) == doctest::Approx(-2.0));
  CHECK(y(2, 0) == doctest::Approx(0.25));
}

TEST_CASE("sac: hand-evaluated target and per-critic loss") {
  // r=1, d=0, gamma=0.99, bootstrapped value T=2 -> y=2.98; critic output 0
  // gives per-critic squared error 8.8804.
  std::mt19937_64 rng(43);
  SacAgentT<double> agent(4, 2, 8, 1e-30, 1e-3, 1e-3, 1e-3, 0.01, rng);
  // force both target critics to output exactly 2 regardless of input
  for (const char* p : {"q1.", "q2."}) {
    const std::string pre(p);
    for (const char* nm : {"w0", "w1", "w2"}) {
      for (auto& v : agent.critic_targets.params.at(pre + nm).value.data) v = 0.0;
    }
    for (auto& v : agent.critic_targets.params.at(pre + "b2").value.data) v = 2.0;
  }
  auto next_latents = random_tensor({1, 4}, rng);
  auto noise = normal_tensor<double>({1, 2}, rng);
  auto y = agent.compute_targets(next_latents, noise, {1.0}, {0}, 0.99);
  CHECK(y(0, 0) == doctest::Approx(2.98).epsilon(1e-9));

  // zero critics predict 0 -> per-critic loss (2.98)^2, summed over the pair
  for (const char* p : {"q1.", "q2."}) {
    const std::string pre(p);
    for (const char* nm : {"w0", "w1", "w2", "b0", "b1", "b2"}) {
      for (auto& v : agent.critics.params.at(pre + nm).value.data) v = 0.0;
    }
  }
  TapeT<double> t;
  Var latents = t.leaf(random_tensor({1, 4}, rng));
  auto actions = random_tensor({1, 2}, rng);
  Var loss = agent.critic_loss(t, latents, actions, y);
  CHECK(t.value(loss).data[0] == doctest::Approx(2.0 * 8.8804).epsilon(1e-9));
}

TEST_CASE("sac: critics matching the target give zero loss") {
  std::mt19937_64 rng(47);
  SacAgentT<double> agent(3, 1, 8, 0.1, 1e-3, 1e-3, 1e-3, 0.01, rng);
  for (const char* p : {"q1.", "q2."}) {
    const std::string pre(p);
    for (const char* nm : {"w0", "w1", "w2", "b0", "b1"}) {
      for (auto& v : agent.critics.params.at(pre + nm).value.data) v = 0.0;
    }
    for (auto& v : agent.critics.params.at(pre + "b2").value.data) v = 1.5;
  }
  TapeT<double> t;
  Var latents = t.leaf(random_tensor({4, 3}, rng));
  auto actions = random_tensor({4, 1}, rng);
  auto y = TensorT<double>::full({4, 1}, 1.5);
  CHECK(t.value(agent.critic_loss(t, latents, actions, y)).data[0] == doctest::Approx(0.0));
}

TEST_CASE("sac: gradcheck critic loss wrt critics and latents") {
  std::mt19937_64 rng(53);
  SacAgentT<double> agent(3, 2, 6, 0.1, 1e-3, 1e-3, 1e-3, 0.01, rng);
  ParameterSetT<double> lat;
  lat.add("latents", random_tensor({4, 3}, rng));
  auto actions = random_tensor({4, 2}, rng);
  auto y = random_tensor({4, 1}, rng);
  GradCheck gc;
  double err = gc.max_rel_error(
      [&](TapeT<double>& t) {
        return agent.critic_loss(t, t.param(lat, "latents"), actions, y);
      },
      {&agent.critics.params, &lat});
  CHECK(err < 1e-4);
}

TEST_CASE("sac: gradcheck actor loss on a small toy") {
  std::mt19937_64 rng(59);
  SacAgentT<double> agent(3, 2, 6, 0.1, 1e-3, 1e-3, 1e-3, 0.01, rng);
  auto latents = random_tensor({4, 3}, rng);
  auto noise = normal_tensor<double>({4, 2}, rng);
  GradCheck gc;
  double err = gc.max_rel_error(
      [&](TapeT<double>& t) {
        Var l = t.leaf(latents);
        return agent.actor_loss(t, l, noise, nullptr);
      },
      {&agent.actor.params});
  CHECK(err < 1e-4);
}

TEST_CASE("sac: actor loss leaves critics and encoder-side latents gradient-free") {
  std::mt19937_64 rng(61);
  SacAgentT<double> agent(3, 2, 6, 0.1, 1e-3, 1e-3, 1e-3, 0.01, rng);
  agent.critics.params.zero_grads();
  agent.actor.params.zero_grads();
  TapeT<double> t;
  Var latents = t.leaf(random_tensor({4, 3}, rng));  // detached: plain constant leaf
  auto noise = normal_tensor<double>({4, 2}, rng);
  Var loss = agent.actor_loss(t, latents, noise, nullptr);
  t.backward(loss);
  CHECK(agent.critics.params.grads_all_zero());
  CHECK_FALSE(agent.actor.params.grads_all_zero());
}

TEST_CASE("sac: actor loss with alpha=0 and constant critics has zero actor gradient through Q") {
  std::mt19937_64 rng(67);
  SacAgentT<double> agent(3, 1, 6, 1e-300, 1e-3, 1e-3, 1e-3, 0.01, rng);
  // constant critics: no dependence on the action
  for (const char* p : {"q1.", "q2."}) {
    const std::string pre(p);
    for (const char* nm : {"w0", "w1", "w2", "b0", "b1"}) {
      for (auto& v : agent.critics.params.at(pre + nm).value.data) v = 0.0;
    }
    for (auto& v : agent.critics.params.at(pre + "b2").value.data) v = 0.7;
  }
  agent.actor.params.zero_grads();
  TapeT<double> t;
  Var latents = t.leaf(random_tensor({4, 3}, rng));
  auto noise = normal_tensor<double>({4, 1}, rng);
  Var loss = agent.actor_loss(t, latents, noise, nullptr);
  CHECK(t.value(loss).data[0] == doctest::Approx(-0.7).epsilon(1e-9));
  t.backward(loss);
  // alpha ~ 0 and dQ/da = 0 leave nothing to push on the actor
  for (std::size_t i = 0; i < agent.actor.params.size(); ++i) {
    for (double g : agent.actor.params.entry(i).grad.data) CHECK(std::abs(g) < 1e-250);
  }
}

TEST_CASE("alpha: stationary when log pi == -target_entropy, grows when too deterministic") {
  std::mt19937_64 rng(71);
  SacAgentT<double> agent(3, 2, 6, 0.5, 1e-3, 1e-3, 1e-3, 0.01, rng);
  // exact stationarity: log pi == -target_entropy
  {
    agent.alpha.params.zero_grads();
    TapeT<double> t;
    auto lp = TensorT<double>::full({8, 1}, -agent.alpha.target_entropy);
    t.backward(agent.alpha_loss(t, lp));
    CHECK(agent.alpha.params.at("log_alpha").grad.data[0] == doctest::Approx(0.0));
  }
  // policy too deterministic (high log pi) -> gradient pushes alpha up
  {
    agent.alpha.params.zero_grads();
    const double before = agent.alpha.alpha();
    TapeT<double> t;
    auto lp = TensorT<double>::full({8, 1}, 5.0);
    t.backward(agent.alpha_loss(t, lp));
    adam_step(agent.alpha.params, agent.alpha_adam);
    CHECK(agent.alpha.alpha() > before);
  }
}

TEST_CASE("alpha: stays positive over many random updates") {
  std::mt19937_64 rng(73);
  SacAgentT<double> agent(2, 1, 4, 0.1, 1e-3, 1e-3, 1e-2, 0.01, rng);
  std::uniform_real_distribution<double> dist(-30.0, 30.0);
  for (int i = 0; i < 100000; ++i) {
    TapeT<double> t;
    auto lp = TensorT<double>::full({1, 1}, dist(rng));
    t.backward(agent.alpha_loss(t, lp));
    adam_step(agent.alpha.params, agent.alpha_adam);
    CHECK(agent.alpha.alpha() > 0.0);
  }
}

TEST_CASE("targets: constant between syncs, tau=1 copies the mains") {
  std::mt19937_64 rng(79);
  SacAgentT<double> agent(3, 1, 6, 0.1, 1e-3, 1e-3, 1e-3, 1.0, rng);
  auto latents = random_tensor({2, 3}, rng);
  auto actions = random_tensor({2, 1}, rng);

  auto target_out = [&]() {
    TapeT<double> t;
    auto [tq1, tq2] = agent.critic_targets_forward(t, t.leaf(latents), t.leaf(actions));
    return std::pair{t.value(tq1).data[0], t.value(tq2).data[0]};
  };
  auto before = target_out();

  // perturb the mains; targets must not move until sync_targets()
  for (auto& v : agent.critics.params.at("q1.b2").value.data) v += 0.5;
  auto mid = target_out();
  CHECK(mid.first == before.first);
  CHECK(mid.second == before.second);

  agent.sync_targets();  // tau = 1
  auto after = target_out();
  TapeT<double> t;
  auto [q1, q2] = agent.critics.forward(t, t.leaf(latents), t.leaf(actions), false);
  CHECK(after.first == doctest::Approx(t.value(q1).data[0]));
  CHECK(after.second == doctest::Approx(t.value(q2).data[0]));
}

TEST_CASE("critic targets receive no gradient from the critic loss") {
  std::mt19937_64 rng(83);
  SacAgentT<double> agent(3, 2, 6, 0.1, 1e-3, 1e-3, 1e-3, 0.01, rng);
  agent.critic_targets.params.zero_grads();
  agent.actor.params.zero_grads();
  auto next_latents = random_tensor({4, 3}, rng);
  auto noise = normal_tensor<double>({4, 2}, rng);
  auto y = agent.compute_targets(next_latents, noise, {0.1, 0.2, 0.3, 0.4}, {0, 0, 1, 0}, 0.99);
  TapeT<double> t;
  Var latents = t.leaf(random_tensor({4, 3}, rng));
  t.backward(agent.critic_loss(t, latents, random_tensor({4, 2}, rng), y));
  CHECK(agent.critic_targets.params.grads_all_zero());
  CHECK(agent.actor.params.grads_all_zero());
}

TEST_CASE("compute_targets: non-finite reward aborts with diagnostic") {
  std::mt19937_64 rng(89);
  SacAgentT<double> agent(3, 2, 6, 0.1, 1e-3, 1e-3, 1e-3, 0.01, rng);
  auto next_latents = random_tensor({1, 3}, rng);
  auto noise = normal_tensor<double>({1, 2}, rng);
  CHECK_THROWS_AS(
      agent.compute_targets(next_latents, noise, {std::numeric_limits<double>::infinity()}, {0}, 0.99),
      NumericsError);
}
