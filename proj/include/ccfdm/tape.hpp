#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ccfdm/params.hpp"
#include "ccfdm/tensor.hpp"

namespace ccfdm {

// Handle to a node on a tape. Only meaningful for the tape that produced it.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. One tape records one forward pass and is discarded after
// backward; there is no persistent graph. Ops append nodes in topological
// order, so backward is a single reverse sweep.
template <class T>
class TapeT {
 public:
  struct Node {
    TensorT<T> value;
    TensorT<T> grad;  // allocated on first touch during backward
    std::function<void(TapeT&, std::int32_t)> backprop;
    bool needs_grad = false;
    bool touched = false;
    std::int32_t param_ref = -1;
  };

  Var leaf(TensorT<T> value, bool needs_grad = false) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  // Registers a parameter as a leaf. After backward, the node gradient is
  // folded back into the owning set. With require_grad=false the parameter
  // enters as a constant (stop-gradient).
  Var param(ParameterSetT<T>& ps, std::string_view name, bool require_grad = true) {
    auto& e = ps.at(name);
    Var v = leaf(e.value, require_grad);
    if (require_grad) {
      nodes_[static_cast<std::size_t>(v.id)].param_ref =
          static_cast<std::int32_t>(param_refs_.size());
      param_refs_.push_back({&ps, &e});
    }
    return v;
  }

  Var emit(TensorT<T> value, bool needs_grad, std::function<void(TapeT&, std::int32_t)> backprop) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  const TensorT<T>& value(Var v) const { return node(v).value; }
  TensorT<T>& grad(Var v) { return node(v).grad; }
  bool needs_grad(Var v) const { return node(v).needs_grad; }

  Node& node(Var v) {
    if (!v.valid() || v.id >= static_cast<std::int32_t>(nodes_.size())) {
      throw ConfigError("tape: invalid node handle");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  const Node& node(Var v) const { return const_cast<TapeT*>(this)->node(v); }

  // Accumulate into a node's gradient buffer, allocating it on first use.
  TensorT<T>& touch_grad(std::int32_t id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.touched) {
      n.grad = TensorT<T>::zeros(n.value.shape);
      n.touched = true;
    }
    return n.grad;
  }

  // Reverse sweep from a scalar loss. Gradients of every reachable parameter
  // are accumulated into their owning ParameterSet; unreachable parameters
  // are left as they were (zero if freshly cleared).
  void backward(Var loss) {
    Node& l = node(loss);
    if (l.value.numel() != 1) throw ConfigError("backward: loss must be scalar");
    if (!l.value.all_finite()) throw NumericsError("backward: non-finite loss");
    if (ran_backward_) throw ConfigError("backward: tape already consumed");
    ran_backward_ = true;
    if (!l.needs_grad) return;  // nothing differentiable upstream
    touch_grad(loss.id)(0) = T(1);
    for (std::int32_t i = loss.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (!n.needs_grad || !n.touched) continue;
      if (n.backprop) n.backprop(*this, i);
      if (n.param_ref >= 0) {
        auto& ref = param_refs_[static_cast<std::size_t>(n.param_ref)];
        auto& g = ref.entry->grad.data;
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad.data[k];
      }
    }
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct ParamRef {
    ParameterSetT<T>* set;
    typename ParameterSetT<T>::Entry* entry;
  };
  std::vector<Node> nodes_;
  std::vector<ParamRef> param_refs_;
  bool ran_backward_ = false;
};

}  // namespace ccfdm
