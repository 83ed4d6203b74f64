#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "ccfdm/common.hpp"

namespace ccfdm {

// Dense row-major tensor. The scalar type is a template parameter: training
// runs at 32-bit, gradient checks run at 64-bit.
template <class T>
struct TensorT {
  std::vector<std::int64_t> shape;
  std::vector<T> data;

  TensorT() = default;
  TensorT(std::vector<std::int64_t> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (numel_of(shape) != static_cast<std::int64_t>(data.size())) {
      throw ConfigError("tensor: shape does not match data length");
    }
  }

  static std::int64_t numel_of(const std::vector<std::int64_t>& s) {
    std::int64_t n = 1;
    for (auto d : s) {
      if (d <= 0) throw ConfigError("tensor: non-positive dimension");
      n *= d;
    }
    return n;
  }

  static TensorT zeros(std::vector<std::int64_t> s) {
    auto n = numel_of(s);
    return TensorT(std::move(s), std::vector<T>(static_cast<std::size_t>(n), T(0)));
  }

  static TensorT full(std::vector<std::int64_t> s, T v) {
    auto n = numel_of(s);
    return TensorT(std::move(s), std::vector<T>(static_cast<std::size_t>(n), v));
  }

  static TensorT scalar(T v) { return TensorT({1}, {v}); }

  static TensorT identity(std::int64_t n) {
    auto t = zeros({n, n});
    for (std::int64_t i = 0; i < n; ++i) t.data[static_cast<std::size_t>(i * n + i)] = T(1);
    return t;
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  std::int64_t rank() const { return static_cast<std::int64_t>(shape.size()); }
  std::int64_t dim(std::int64_t i) const { return shape[static_cast<std::size_t>(i)]; }

  T& operator()(std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
  T operator()(std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }
  T& operator()(std::int64_t i, std::int64_t j) { return data[static_cast<std::size_t>(i * dim(1) + j)]; }
  T operator()(std::int64_t i, std::int64_t j) const { return data[static_cast<std::size_t>(i * dim(1) + j)]; }

  bool all_finite() const {
    for (T v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <class U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

inline bool same_shape(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  return a == b;
}

}  // namespace ccfdm
