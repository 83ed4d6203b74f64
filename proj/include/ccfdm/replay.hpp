#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ccfdm/common.hpp"
#include "ccfdm/tensor.hpp"

namespace ccfdm {

// One environment step. Pixels are kept as raw bytes to bound memory; they
// are converted to unit-interval reals at batch-assembly time.
struct Transition {
  std::vector<std::uint8_t> obs;       // frames * H * W
  std::vector<double> action;
  double reward = 0.0;
  std::vector<std::uint8_t> next_obs;  // frames * H * W
  bool done = false;
};

// Ring buffer with uniform with-replacement sampling. Storage grows on push
// until capacity, then the oldest entries are overwritten.
class ReplayBuffer {
 public:
  ReplayBuffer() = default;
  ReplayBuffer(std::int64_t capacity, std::int64_t obs_bytes, std::int64_t action_dim)
      : capacity_(capacity), obs_bytes_(obs_bytes), action_dim_(action_dim) {
    if (capacity <= 0) throw ConfigError("replay: capacity must be positive");
  }

  void push(Transition t) {
    if (static_cast<std::int64_t>(t.obs.size()) != obs_bytes_ ||
        static_cast<std::int64_t>(t.next_obs.size()) != obs_bytes_ ||
        static_cast<std::int64_t>(t.action.size()) != action_dim_) {
      throw ConfigError("replay: transition shape mismatch");
    }
    if (static_cast<std::int64_t>(storage_.size()) < capacity_) {
      storage_.push_back(std::move(t));
    } else {
      storage_[static_cast<std::size_t>(cursor_)] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  // K indices drawn uniformly with replacement from [0, size).
  std::vector<std::int64_t> sample_indices(std::int64_t k, std::mt19937_64& rng) const {
    if (k < 0) throw ConfigError("replay: negative batch size");
    if (size() < k || size() == 0) {
      if (k == 0) return {};
      throw NotReadyError("replay: not enough transitions for the requested batch");
    }
    std::vector<std::int64_t> idx(static_cast<std::size_t>(k));
    std::uniform_int_distribution<std::int64_t> dist(0, size() - 1);
    for (auto& i : idx) i = dist(rng);
    return idx;
  }

  const Transition& at(std::int64_t i) const { return storage_[static_cast<std::size_t>(i)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(storage_.size()); }
  std::int64_t capacity() const { return capacity_; }
  std::int64_t cursor() const { return cursor_; }
  std::int64_t obs_bytes() const { return obs_bytes_; }
  std::int64_t action_dim() const { return action_dim_; }

  // Checkpoint support: raw access in storage order plus cursor restore.
  void restore(std::vector<Transition> storage, std::int64_t cursor) {
    storage_ = std::move(storage);
    cursor_ = cursor;
  }
  const std::vector<Transition>& storage() const { return storage_; }

 private:
  std::int64_t capacity_ = 0;
  std::int64_t obs_bytes_ = 0;
  std::int64_t action_dim_ = 0;
  std::int64_t cursor_ = 0;
  std::vector<Transition> storage_;
};

// Draws one (top, left) offset uniformly over the valid range.
inline std::pair<std::int64_t, std::int64_t> crop_offsets(std::int64_t in_h, std::int64_t in_w,
                                                          std::int64_t out_h, std::int64_t out_w,
                                                          std::mt19937_64& rng) {
  if (out_h > in_h || out_w > in_w) throw ConfigError("random_crop: output larger than input");
  std::uniform_int_distribution<std::int64_t> dh(0, in_h - out_h);
  std::uniform_int_distribution<std::int64_t> dw(0, in_w - out_w);
  const std::int64_t top = dh(rng);
  const std::int64_t left = dw(rng);
  return {top, left};
}

// Copies the (top,left) window of every frame in the stack into dst, scaling
// bytes to [0,1]. The same offset applies to all frames.
template <class T>
void crop_stack_into(T* dst, const std::uint8_t* src, std::int64_t frames, std::int64_t in_h,
                     std::int64_t in_w, std::int64_t top, std::int64_t left, std::int64_t out_h,
                     std::int64_t out_w) {
  constexpr double kScale = 1.0 / 255.0;
  for (std::int64_t f = 0; f < frames; ++f) {
    const std::uint8_t* frame = src + f * in_h * in_w;
    T* out = dst + f * out_h * out_w;
    for (std::int64_t r = 0; r < out_h; ++r) {
      const std::uint8_t* row = frame + (top + r) * in_w + left;
      T* orow = out + r * out_w;
      for (std::int64_t c = 0; c < out_w; ++c) {
        orow[c] = static_cast<T>(static_cast<double>(row[c]) * kScale);
      }
    }
  }
}

// Single-stack random crop: one offset drawn, applied to every frame.
template <class T>
TensorT<T> random_crop(const std::vector<std::uint8_t>& stack, std::int64_t frames,
                       std::int64_t in_h, std::int64_t in_w, std::int64_t out_h,
                       std::int64_t out_w, std::mt19937_64& rng) {
  if (static_cast<std::int64_t>(stack.size()) != frames * in_h * in_w) {
    throw ConfigError("random_crop: stack size mismatch");
  }
  auto [top, left] = crop_offsets(in_h, in_w, out_h, out_w, rng);
  auto out = TensorT<T>::zeros({frames, out_h, out_w});
  crop_stack_into(out.data.data(), stack.data(), frames, in_h, in_w, top, left, out_h, out_w);
  return out;
}

// Deterministic center crop used for acting, evaluation, and the no-augment
// ablation. Consumes no randomness.
template <class T>
TensorT<T> center_crop(const std::vector<std::uint8_t>& stack, std::int64_t frames,
                       std::int64_t in_h, std::int64_t in_w, std::int64_t out_h,
                       std::int64_t out_w) {
  if (out_h > in_h || out_w > in_w) throw ConfigError("center_crop: output larger than input");
  if (static_cast<std::int64_t>(stack.size()) != frames * in_h * in_w) {
    throw ConfigError("center_crop: stack size mismatch");
  }
  auto out = TensorT<T>::zeros({frames, out_h, out_w});
  crop_stack_into(out.data.data(), stack.data(), frames, in_h, in_w, (in_h - out_h) / 2,
                  (in_w - out_w) / 2, out_h, out_w);
  return out;
}

}  // namespace ccfdm
