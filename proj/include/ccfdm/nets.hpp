#pragma once

#include <random>
#include <string>
#include <vector>

#include "ccfdm/ops.hpp"

namespace ccfdm {

// Fan-in scaled uniform init: U(-sqrt(1/fan_in), +sqrt(1/fan_in)).
template <class T>
TensorT<T> fanin_uniform(std::vector<std::int64_t> shape, std::int64_t fan_in,
                         std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto t = TensorT<T>::zeros(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(dist(rng));
  return t;
}

// Plain MLP: ReLU after every layer except the last.
template <class T>
class MlpT {
 public:
  MlpT() = default;
  MlpT(std::vector<std::int64_t> widths, std::mt19937_64& rng) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw ConfigError("mlp: need at least input and output widths");
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      const auto fin = widths_[l], fout = widths_[l + 1];
      params.add("w" + std::to_string(l), fanin_uniform<T>({fout, fin}, fin, rng));
      params.add("b" + std::to_string(l), TensorT<T>::zeros({fout}));
    }
  }

  Var forward(TapeT<T>& t, Var x, bool with_grad) {
    if (t.value(x).rank() != 2 || t.value(x).dim(1) != widths_.front()) {
      throw ConfigError("mlp: input dimension mismatch");
    }
    Var h = x;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      Var w = t.param(params, "w" + std::to_string(l), with_grad);
      Var b = t.param(params, "b" + std::to_string(l), with_grad);
      h = dense(t, h, w, b);
      if (l + 2 < widths_.size()) h = relu(t, h);
    }
    return h;
  }

  std::int64_t in_dim() const { return widths_.front(); }
  std::int64_t out_dim() const { return widths_.back(); }
  const std::vector<std::int64_t>& widths() const { return widths_; }

  ParameterSetT<T> params;

 private:
  std::vector<std::int64_t> widths_;
};

// Convolutional image encoder: four 3x3 conv layers with 32 filters (stride 2
// then 1,1,1) and ReLU, a dense projection to the latent dimension, and layer
// normalization on the output.
template <class T>
class PixelEncoderT {
 public:
  static constexpr std::int64_t kFilters = 32;
  static constexpr std::int64_t kKernel = 3;

  PixelEncoderT() = default;
  PixelEncoderT(std::int64_t channels, std::int64_t height, std::int64_t width,
                std::int64_t latent_dim, std::mt19937_64& rng)
      : channels_(channels), height_(height), width_(width), latent_dim_(latent_dim) {
    std::int64_t h = height, w = width, c = channels;
    for (int l = 0; l < 4; ++l) {
      const std::int64_t stride = stride_of(l);
      if (h < kKernel || w < kKernel) throw ConfigError("encoder: input too small for conv stack");
      params.add("conv" + std::to_string(l) + ".w",
                 fanin_uniform<T>({kFilters, c, kKernel, kKernel}, c * kKernel * kKernel, rng));
      params.add("conv" + std::to_string(l) + ".b", TensorT<T>::zeros({kFilters}));
      h = (h - kKernel) / stride + 1;
      w = (w - kKernel) / stride + 1;
      c = kFilters;
    }
    flat_dim_ = kFilters * h * w;
    params.add("proj.w", fanin_uniform<T>({latent_dim_, flat_dim_}, flat_dim_, rng));
    params.add("proj.b", TensorT<T>::zeros({latent_dim_}));
    params.add("ln.g", TensorT<T>::full({latent_dim_}, T(1)));
    params.add("ln.b", TensorT<T>::zeros({latent_dim_}));
  }

  // obs: (N, channels, height, width). With with_grad=false the parameters
  // enter the tape as constants, so no gradient ever reaches them.
  Var forward(TapeT<T>& t, const TensorT<T>& obs, bool with_grad) {
    if (obs.rank() != 4 || obs.dim(1) != channels_ || obs.dim(2) != height_ ||
        obs.dim(3) != width_) {
      throw ConfigError("encoder: observation shape mismatch");
    }
    Var h = t.leaf(obs);
    for (int l = 0; l < 4; ++l) {
      Var w = t.param(params, "conv" + std::to_string(l) + ".w", with_grad);
      Var b = t.param(params, "conv" + std::to_string(l) + ".b", with_grad);
      h = relu(t, conv2d(t, h, w, b, stride_of(l)));
    }
    h = flatten(t, h);
    h = dense(t, h, t.param(params, "proj.w", with_grad), t.param(params, "proj.b", with_grad));
    h = layer_norm(t, h, t.param(params, "ln.g", with_grad), t.param(params, "ln.b", with_grad));
    return h;
  }

  // Off-tape convenience for acting and evaluation.
  TensorT<T> encode(const TensorT<T>& obs) {
    TapeT<T> t;
    return t.value(forward(t, obs, false));
  }

  std::int64_t latent_dim() const { return latent_dim_; }
  std::int64_t channels() const { return channels_; }
  std::int64_t height() const { return height_; }
  std::int64_t width() const { return width_; }

  ParameterSetT<T> params;

 private:
  static std::int64_t stride_of(int layer) { return layer == 0 ? 2 : 1; }

  std::int64_t channels_ = 0, height_ = 0, width_ = 0;
  std::int64_t latent_dim_ = 0, flat_dim_ = 0;
};

}  // namespace ccfdm
