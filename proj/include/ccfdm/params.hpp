#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ccfdm/tensor.hpp"

namespace ccfdm {

// Flat named collection of learnable arrays plus parallel gradient storage.
// Entries keep insertion order; iteration order is deterministic.
template <class T>
class ParameterSetT {
 public:
  struct Entry {
    std::string name;
    TensorT<T> value;
    TensorT<T> grad;
  };

  TensorT<T>& add(std::string_view name, TensorT<T> init) {
    if (find(name) != nullptr) throw ConfigError("parameter name not unique: " + std::string(name));
    Entry e;
    e.name = std::string(name);
    e.grad = TensorT<T>::zeros(init.shape);
    e.value = std::move(init);
    entries_.push_back(std::move(e));
    return entries_.back().value;
  }

  Entry* find(std::string_view name) {
    for (auto& e : entries_) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }
  const Entry* find(std::string_view name) const {
    return const_cast<ParameterSetT*>(this)->find(name);
  }

  Entry& at(std::string_view name) {
    Entry* e = find(name);
    if (e == nullptr) throw ConfigError("no such parameter: " + std::string(name));
    return *e;
  }
  const Entry& at(std::string_view name) const {
    return const_cast<ParameterSetT*>(this)->at(name);
  }

  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }

  void zero_grads() {
    for (auto& e : entries_) std::fill(e.grad.data.begin(), e.grad.data.end(), T(0));
  }

  bool grads_all_zero() const {
    for (const auto& e : entries_) {
      for (T g : e.grad.data) {
        if (g != T(0)) return false;
      }
    }
    return true;
  }

  std::int64_t total_count() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.value.numel();
    return n;
  }

 private:
  std::vector<Entry> entries_;
};

// Adam moments mirror a ParameterSet entry-for-entry.
template <class T>
struct AdamStateT {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step_count = 0;
  std::vector<TensorT<T>> first_moment;
  std::vector<TensorT<T>> second_moment;

  static AdamStateT for_params(const ParameterSetT<T>& ps, double lr) {
    AdamStateT st;
    st.learning_rate = lr;
    st.first_moment.reserve(ps.size());
    st.second_moment.reserve(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
      st.first_moment.push_back(TensorT<T>::zeros(ps.entry(i).value.shape));
      st.second_moment.push_back(TensorT<T>::zeros(ps.entry(i).value.shape));
    }
    return st;
  }
};

// Bias-corrected Adam update; consumes and clears the gradients.
template <class T>
void adam_step(ParameterSetT<T>& ps, AdamStateT<T>& st) {
  if (st.first_moment.size() != ps.size()) throw ConfigError("adam state does not match parameter set");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& e = ps.entry(i);
    if (!same_shape(st.first_moment[i].shape, e.value.shape)) {
      throw ConfigError("adam moment shape mismatch for " + e.name);
    }
    if (!e.grad.all_finite()) {
      throw NumericsError("adam_step: non-finite gradient in " + e.name);
    }
  }
  st.step_count += 1;
  const double b1 = st.beta1, b2 = st.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(st.step_count));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(st.step_count));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& e = ps.entry(i);
    auto& m = st.first_moment[i].data;
    auto& v = st.second_moment[i].data;
    for (std::size_t k = 0; k < e.value.data.size(); ++k) {
      const double g = static_cast<double>(e.grad.data[k]);
      const double mk = b1 * static_cast<double>(m[k]) + (1.0 - b1) * g;
      const double vk = b2 * static_cast<double>(v[k]) + (1.0 - b2) * g * g;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double mhat = mk / corr1;
      const double vhat = vk / corr2;
      e.value.data[k] = static_cast<T>(static_cast<double>(e.value.data[k]) -
                                       st.learning_rate * mhat / (std::sqrt(vhat) + st.epsilon));
    }
    std::fill(e.grad.data.begin(), e.grad.data.end(), T(0));
  }
}

// target <- tau * source + (1 - tau) * target, elementwise over every entry.
template <class T>
void ema_blend(ParameterSetT<T>& target, const ParameterSetT<T>& source, double tau) {
  if (tau < 0.0 || tau > 1.0) throw ConfigError("ema_blend: tau outside [0, 1]");
  if (target.size() != source.size()) throw ConfigError("ema_blend: entry count mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto& t = target.entry(i);
    const auto& s = source.entry(i);
    if (t.name != s.name || !same_shape(t.value.shape, s.value.shape)) {
      throw ConfigError("ema_blend: mismatched entry " + t.name + " vs " + s.name);
    }
    for (std::size_t k = 0; k < t.value.data.size(); ++k) {
      t.value.data[k] = static_cast<T>(tau * static_cast<double>(s.value.data[k]) +
                                       (1.0 - tau) * static_cast<double>(t.value.data[k]));
    }
  }
}

// Copies values (not gradients) entry-for-entry; shapes must agree.
template <class T>
void copy_values(ParameterSetT<T>& target, const ParameterSetT<T>& source) {
  ema_blend(target, source, 1.0);
}

}  // namespace ccfdm
