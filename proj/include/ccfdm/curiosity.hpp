#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "ccfdm/tensor.hpp"

namespace ccfdm {

// Running state of the intrinsic-reward module: decay clock plus running
// maxima used to normalize the raw prediction error. Rewards carry no
// gradient; everything here is plain scalar math outside any tape.
struct CuriosityState {
  double intrinsic_weight = 0.2;  // C
  double decay = 2e-5;            // exponential decay weight
  double re_max = 0.0;            // running max |extrinsic reward|
  double ri_max = 0.0;            // running max raw prediction error
  std::uint64_t step = 0;         // global environment step at replay time

  static constexpr double kRiMaxGuard = 1e-8;
};

// Squared Euclidean distance between a predicted and an encoded latent.
template <class T>
double prediction_error(const T* q, const T* k, std::int64_t dim) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < dim; ++i) {
    const double d = static_cast<double>(q[i]) - static_cast<double>(k[i]);
    acc += d * d;
  }
  return acc;
}

template <class T>
double prediction_error(const TensorT<T>& q, const TensorT<T>& k) {
  if (q.numel() != k.numel()) throw ConfigError("prediction_error: dimension mismatch");
  return prediction_error(q.data.data(), k.data.data(), q.numel());
}

inline void update_maxima(CuriosityState& s, double extrinsic, double raw_error) {
  s.re_max = std::max(s.re_max, std::abs(extrinsic));
  s.ri_max = std::max(s.ri_max, raw_error);
}

// r_i = C * exp(-decay * t) * error * re_max / ri_max, with degenerate
// normalizers mapping to zero by contract.
inline double intrinsic_reward(const CuriosityState& s, double error) {
  if (s.ri_max < CuriosityState::kRiMaxGuard || s.re_max == 0.0) return 0.0;
  return s.intrinsic_weight * std::exp(-s.decay * static_cast<double>(s.step)) * error *
         (s.re_max / s.ri_max);
}

}  // namespace ccfdm
