#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>

#include "ccfdm/tape.hpp"

namespace ccfdm {

template <class T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapM = Eigen::Map<MatR<T>>;
template <class T>
using CMapM = Eigen::Map<const MatR<T>>;

namespace detail {

template <class T, class Fwd, class Bwd>
Var unary(TapeT<T>& t, Var x, Fwd&& fwd, Bwd&& bwd) {
  const auto& xv = t.value(x);
  TensorT<T> out;
  out.shape = xv.shape;
  out.data.resize(xv.data.size());
  for (std::size_t i = 0; i < xv.data.size(); ++i) out.data[i] = fwd(xv.data[i]);
  const bool ng = t.needs_grad(x);
  const std::int32_t xid = x.id;
  return t.emit(std::move(out), ng,
                [xid, bwd](TapeT<T>& tp, std::int32_t self) {
                  const auto& g = tp.node(Var{self}).grad;
                  const auto& xval = tp.node(Var{xid}).value;
                  const auto& yval = tp.node(Var{self}).value;
                  auto& xg = tp.touch_grad(xid);
                  for (std::size_t i = 0; i < g.data.size(); ++i) {
                    xg.data[i] += bwd(xval.data[i], yval.data[i], g.data[i]);
                  }
                });
}

}  // namespace detail

template <class T>
Var relu(TapeT<T>& t, Var x) {
  return detail::unary(
      t, x, [](T v) { return v > T(0) ? v : T(0); },
      [](T xv, T, T g) { return xv > T(0) ? g : T(0); });
}

template <class T>
Var tanh_op(TapeT<T>& t, Var x) {
  return detail::unary(
      t, x, [](T v) { return std::tanh(v); },
      [](T, T yv, T g) { return (T(1) - yv * yv) * g; });
}

template <class T>
Var exp_op(TapeT<T>& t, Var x) {
  return detail::unary(
      t, x, [](T v) { return std::exp(v); },
      [](T, T yv, T g) { return yv * g; });
}

template <class T>
Var log_op(TapeT<T>& t, Var x) {
  return detail::unary(
      t, x, [](T v) { return std::log(v); },
      [](T xv, T, T g) { return g / xv; });
}

template <class T>
Var square(TapeT<T>& t, Var x) {
  return detail::unary(
      t, x, [](T v) { return v * v; },
      [](T xv, T, T g) { return T(2) * xv * g; });
}

template <class T>
Var neg(TapeT<T>& t, Var x) {
  return detail::unary(
      t, x, [](T v) { return -v; },
      [](T, T, T g) { return -g; });
}

template <class T>
Var add_const(TapeT<T>& t, Var x, T c) {
  return detail::unary(
      t, x, [c](T v) { return v + c; },
      [](T, T, T g) { return g; });
}

template <class T>
Var mul_const(TapeT<T>& t, Var x, T c) {
  return detail::unary(
      t, x, [c](T v) { return v * c; },
      [c](T, T, T g) { return c * g; });
}

// Gradient is passed through strictly inside (lo, hi) and cut at the bounds.
template <class T>
Var clamp(TapeT<T>& t, Var x, T lo, T hi) {
  return detail::unary(
      t, x, [lo, hi](T v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](T xv, T, T g) { return (xv > lo && xv < hi) ? g : T(0); });
}

namespace detail {

template <class T, class Combine, class BwdA, class BwdB>
Var binary(TapeT<T>& t, Var a, Var b, Combine&& f, BwdA&& dfa, BwdB&& dfb, const char* name) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  if (!same_shape(av.shape, bv.shape)) throw ConfigError(std::string(name) + ": shape mismatch");
  TensorT<T> out;
  out.shape = av.shape;
  out.data.resize(av.data.size());
  for (std::size_t i = 0; i < av.data.size(); ++i) out.data[i] = f(av.data[i], bv.data[i]);
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  const std::int32_t aid = a.id, bid = b.id;
  return t.emit(std::move(out), ng,
                [aid, bid, dfa, dfb](TapeT<T>& tp, std::int32_t self) {
                  const auto& g = tp.node(Var{self}).grad;
                  const auto& aval = tp.node(Var{aid}).value;
                  const auto& bval = tp.node(Var{bid}).value;
                  if (tp.needs_grad(Var{aid})) {
                    auto& ag = tp.touch_grad(aid);
                    for (std::size_t i = 0; i < g.data.size(); ++i) {
                      ag.data[i] += dfa(aval.data[i], bval.data[i], g.data[i]);
                    }
                  }
                  if (tp.needs_grad(Var{bid})) {
                    auto& bg = tp.touch_grad(bid);
                    for (std::size_t i = 0; i < g.data.size(); ++i) {
                      bg.data[i] += dfb(aval.data[i], bval.data[i], g.data[i]);
                    }
                  }
                });
}

}  // namespace detail

template <class T>
Var add(TapeT<T>& t, Var a, Var b) {
  return detail::binary(
      t, a, b, [](T x, T y) { return x + y; },
      [](T, T, T g) { return g; }, [](T, T, T g) { return g; }, "add");
}

template <class T>
Var sub(TapeT<T>& t, Var a, Var b) {
  return detail::binary(
      t, a, b, [](T x, T y) { return x - y; },
      [](T, T, T g) { return g; }, [](T, T, T g) { return -g; }, "sub");
}

template <class T>
Var mul(TapeT<T>& t, Var a, Var b) {
  return detail::binary(
      t, a, b, [](T x, T y) { return x * y; },
      [](T, T y, T g) { return y * g; }, [](T x, T, T g) { return x * g; }, "mul");
}

// Elementwise minimum; ties route the gradient to the first argument.
template <class T>
Var min_elem(TapeT<T>& t, Var a, Var b) {
  return detail::binary(
      t, a, b, [](T x, T y) { return x <= y ? x : y; },
      [](T x, T y, T g) { return x <= y ? g : T(0); },
      [](T x, T y, T g) { return x <= y ? T(0) : g; }, "min_elem");
}

// y = x * s with s a scalar node (shape {1}).
template <class T>
Var scale_by(TapeT<T>& t, Var x, Var s) {
  const auto& xv = t.value(x);
  const auto& sv = t.value(s);
  if (sv.numel() != 1) throw ConfigError("scale_by: scale must be scalar");
  TensorT<T> out;
  out.shape = xv.shape;
  out.data.resize(xv.data.size());
  const T sc = sv.data[0];
  for (std::size_t i = 0; i < xv.data.size(); ++i) out.data[i] = xv.data[i] * sc;
  const bool ng = t.needs_grad(x) || t.needs_grad(s);
  const std::int32_t xid = x.id, sid = s.id;
  return t.emit(std::move(out), ng,
                [xid, sid](TapeT<T>& tp, std::int32_t self) {
                  const auto& g = tp.node(Var{self}).grad;
                  const auto& xval = tp.node(Var{xid}).value;
                  const T sc2 = tp.node(Var{sid}).value.data[0];
                  if (tp.needs_grad(Var{xid})) {
                    auto& xg = tp.touch_grad(xid);
                    for (std::size_t i = 0; i < g.data.size(); ++i) xg.data[i] += sc2 * g.data[i];
                  }
                  if (tp.needs_grad(Var{sid})) {
                    T acc = T(0);
                    for (std::size_t i = 0; i < g.data.size(); ++i) acc += xval.data[i] * g.data[i];
                    tp.touch_grad(sid).data[0] += acc;
                  }
                });
}

// Detached copy: same value, no gradient path.
template <class T>
Var stop_grad(TapeT<T>& t, Var x) {
  return t.leaf(t.value(x), false);
}

// (N, ...) -> (N, rest)
template <class T>
Var flatten(TapeT<T>& t, Var x) {
  const auto& xv = t.value(x);
  if (xv.rank() < 2) throw ConfigError("flatten: rank must be >= 2");
  const std::int64_t n = xv.dim(0);
  const std::int64_t rest = xv.numel() / n;
  TensorT<T> out;
  out.shape = {n, rest};
  out.data = xv.data;
  const bool ng = t.needs_grad(x);
  const std::int32_t xid = x.id;
  return t.emit(std::move(out), ng,
                [xid](TapeT<T>& tp, std::int32_t self) {
                  if (!tp.needs_grad(Var{xid})) return;
                  const auto& g = tp.node(Var{self}).grad;
                  auto& xg = tp.touch_grad(xid);
                  for (std::size_t i = 0; i < g.data.size(); ++i) xg.data[i] += g.data[i];
                });
}

// y = x * W^T + b with x (N, in), W (out, in), b (out).
template <class T>
Var dense(TapeT<T>& t, Var x, Var w, Var b) {
  const auto& xv = t.value(x);
  const auto& wv = t.value(w);
  const auto& bv = t.value(b);
  if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1) {
    throw ConfigError("dense: expected x (N,in), w (out,in), b (out)");
  }
  const std::int64_t n = xv.dim(0), fin = xv.dim(1);
  const std::int64_t fout = wv.dim(0);
  if (wv.dim(1) != fin) throw ConfigError("dense: input dimension does not match weight");
  if (bv.dim(0) != fout) throw ConfigError("dense: bias dimension does not match weight");

  TensorT<T> out = TensorT<T>::zeros({n, fout});
  {
    CMapM<T> X(xv.data.data(), n, fin);
    CMapM<T> W(wv.data.data(), fout, fin);
    MapM<T> Y(out.data.data(), n, fout);
    Y.noalias() = X * W.transpose();
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bvec(bv.data.data(), fout);
    Y.rowwise() += bvec.transpose();
  }
  const bool ng = t.needs_grad(x) || t.needs_grad(w) || t.needs_grad(b);
  const std::int32_t xid = x.id, wid = w.id, bid = b.id;
  return t.emit(std::move(out), ng,
                [xid, wid, bid, n, fin, fout](TapeT<T>& tp, std::int32_t self) {
                  const auto& g = tp.node(Var{self}).grad;
                  CMapM<T> G(g.data.data(), n, fout);
                  const auto& xval = tp.node(Var{xid}).value;
                  const auto& wval = tp.node(Var{wid}).value;
                  CMapM<T> X(xval.data.data(), n, fin);
                  CMapM<T> W(wval.data.data(), fout, fin);
                  if (tp.needs_grad(Var{xid})) {
                    MapM<T> XG(tp.touch_grad(xid).data.data(), n, fin);
                    XG.noalias() += G * W;
                  }
                  if (tp.needs_grad(Var{wid})) {
                    MapM<T> WG(tp.touch_grad(wid).data.data(), fout, fin);
                    WG.noalias() += G.transpose() * X;
                  }
                  if (tp.needs_grad(Var{bid})) {
                    auto& bg = tp.touch_grad(bid).data;
                    for (std::int64_t i = 0; i < n; ++i) {
                      for (std::int64_t j = 0; j < fout; ++j) {
                        bg[static_cast<std::size_t>(j)] += G(i, j);
                      }
                    }
                  }
                });
}

namespace detail {

template <class T>
void im2col(const T* x, std::int64_t c_in, std::int64_t h, std::int64_t w, std::int64_t kh,
            std::int64_t kw, std::int64_t stride, std::int64_t oh, std::int64_t ow, T* col) {
  const std::int64_t p = oh * ow;
  for (std::int64_t c = 0; c < c_in; ++c) {
    for (std::int64_t i = 0; i < kh; ++i) {
      for (std::int64_t j = 0; j < kw; ++j) {
        T* dst = col + (((c * kh) + i) * kw + j) * p;
        for (std::int64_t r = 0; r < oh; ++r) {
          const T* src = x + ((c * h) + (r * stride + i)) * w + j;
          if (stride == 1) {
            std::copy(src, src + ow, dst);
          } else {
            for (std::int64_t q = 0; q < ow; ++q) dst[q] = src[q * stride];
          }
          dst += ow;
        }
      }
    }
  }
}

template <class T>
void col2im_add(const T* col, std::int64_t c_in, std::int64_t h, std::int64_t w, std::int64_t kh,
                std::int64_t kw, std::int64_t stride, std::int64_t oh, std::int64_t ow, T* x) {
  const std::int64_t p = oh * ow;
  for (std::int64_t c = 0; c < c_in; ++c) {
    for (std::int64_t i = 0; i < kh; ++i) {
      for (std::int64_t j = 0; j < kw; ++j) {
        const T* src = col + (((c * kh) + i) * kw + j) * p;
        for (std::int64_t r = 0; r < oh; ++r) {
          T* dst = x + ((c * h) + (r * stride + i)) * w + j;
          for (std::int64_t q = 0; q < ow; ++q) dst[q * stride] += src[q];
          src += ow;
        }
      }
    }
  }
}

}  // namespace detail

// Valid cross-correlation. x (N,C,H,W), w (O,C,KH,KW), b (O).
template <class T>
Var conv2d(TapeT<T>& t, Var x, Var w, Var b, std::int64_t stride) {
  const auto& xv = t.value(x);
  const auto& wv = t.value(w);
  const auto& bv = t.value(b);
  if (xv.rank() != 4 || wv.rank() != 4 || bv.rank() != 1) {
    throw ConfigError("conv2d: expected x (N,C,H,W), w (O,C,KH,KW), b (O)");
  }
  if (stride < 1) throw ConfigError("conv2d: stride must be positive");
  const std::int64_t n = xv.dim(0), c_in = xv.dim(1), h = xv.dim(2), wd = xv.dim(3);
  const std::int64_t c_out = wv.dim(0), kh = wv.dim(2), kw = wv.dim(3);
  if (wv.dim(1) != c_in) throw ConfigError("conv2d: channel mismatch");
  if (bv.dim(0) != c_out) throw ConfigError("conv2d: bias dimension mismatch");
  if (kh > h || kw > wd) throw ConfigError("conv2d: kernel larger than input");
  const std::int64_t oh = (h - kh) / stride + 1;
  const std::int64_t ow = (wd - kw) / stride + 1;
  const std::int64_t k = c_in * kh * kw;
  const std::int64_t p = oh * ow;

  TensorT<T> out = TensorT<T>::zeros({n, c_out, oh, ow});
  {
    std::vector<T> col(static_cast<std::size_t>(k * p));
    CMapM<T> W(wv.data.data(), c_out, k);
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bvec(bv.data.data(), c_out);
    for (std::int64_t s = 0; s < n; ++s) {
      detail::im2col(xv.data.data() + s * c_in * h * wd, c_in, h, wd, kh, kw, stride, oh, ow,
                     col.data());
      CMapM<T> Col(col.data(), k, p);
      MapM<T> Y(out.data.data() + s * c_out * p, c_out, p);
      Y.noalias() = W * Col;
      Y.colwise() += bvec;
    }
  }
  const bool ng = t.needs_grad(x) || t.needs_grad(w) || t.needs_grad(b);
  const std::int32_t xid = x.id, wid = w.id, bid = b.id;
  return t.emit(
      std::move(out), ng,
      [xid, wid, bid, n, c_in, h, wd, c_out, kh, kw, stride, oh, ow, k, p](TapeT<T>& tp,
                                                                           std::int32_t self) {
        const auto& g = tp.node(Var{self}).grad;
        const auto& xval = tp.node(Var{xid}).value;
        const auto& wval = tp.node(Var{wid}).value;
        CMapM<T> W(wval.data.data(), c_out, k);
        const bool need_x = tp.needs_grad(Var{xid});
        const bool need_w = tp.needs_grad(Var{wid});
        const bool need_b = tp.needs_grad(Var{bid});
        std::vector<T> col(static_cast<std::size_t>(k * p));
        std::vector<T> dcol(need_x ? static_cast<std::size_t>(k * p) : 0);
        for (std::int64_t s = 0; s < n; ++s) {
          CMapM<T> G(g.data.data() + s * c_out * p, c_out, p);
          if (need_w) {
            detail::im2col(xval.data.data() + s * c_in * h * wd, c_in, h, wd, kh, kw, stride, oh,
                           ow, col.data());
            CMapM<T> Col(col.data(), k, p);
            MapM<T> WG(tp.touch_grad(wid).data.data(), c_out, k);
            WG.noalias() += G * Col.transpose();
          }
          if (need_x) {
            MapM<T> DCol(dcol.data(), k, p);
            DCol.noalias() = W.transpose() * G;
            detail::col2im_add(dcol.data(), c_in, h, wd, kh, kw, stride, oh, ow,
                               tp.touch_grad(xid).data.data() + s * c_in * h * wd);
          }
          if (need_b) {
            auto& bg = tp.touch_grad(bid).data;
            for (std::int64_t o = 0; o < c_out; ++o) {
              T acc = T(0);
              for (std::int64_t q = 0; q < p; ++q) acc += G(o, q);
              bg[static_cast<std::size_t>(o)] += acc;
            }
          }
        }
      });
}

// a (N,K) x b (K,M), or a (N,K) x b (M,K)^T when trans_b.
template <class T>
Var matmul(TapeT<T>& t, Var a, Var b, bool trans_b = false) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  if (av.rank() != 2 || bv.rank() != 2) throw ConfigError("matmul: rank-2 operands required");
  const std::int64_t n = av.dim(0), kk = av.dim(1);
  const std::int64_t m = trans_b ? bv.dim(0) : bv.dim(1);
  if ((trans_b ? bv.dim(1) : bv.dim(0)) != kk) throw ConfigError("matmul: inner dimension mismatch");
  TensorT<T> out = TensorT<T>::zeros({n, m});
  {
    CMapM<T> A(av.data.data(), n, kk);
    MapM<T> Y(out.data.data(), n, m);
    if (trans_b) {
      CMapM<T> B(bv.data.data(), m, kk);
      Y.noalias() = A * B.transpose();
    } else {
      CMapM<T> B(bv.data.data(), kk, m);
      Y.noalias() = A * B;
    }
  }
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  const std::int32_t aid = a.id, bid = b.id;
  return t.emit(std::move(out), ng,
                [aid, bid, n, kk, m, trans_b](TapeT<T>& tp, std::int32_t self) {
                  const auto& g = tp.node(Var{self}).grad;
                  CMapM<T> G(g.data.data(), n, m);
                  const auto& aval = tp.node(Var{aid}).value;
                  const auto& bval = tp.node(Var{bid}).value;
                  CMapM<T> A(aval.data.data(), n, kk);
                  if (trans_b) {
                    CMapM<T> B(bval.data.data(), m, kk);
                    if (tp.needs_grad(Var{aid})) {
                      MapM<T> AG(tp.touch_grad(aid).data.data(), n, kk);
                      AG.noalias() += G * B;
                    }
                    if (tp.needs_grad(Var{bid})) {
                      MapM<T> BG(tp.touch_grad(bid).data.data(), m, kk);
                      BG.noalias() += G.transpose() * A;
                    }
                  } else {
                    CMapM<T> B(bval.data.data(), kk, m);
                    if (tp.needs_grad(Var{aid})) {
                      MapM<T> AG(tp.touch_grad(aid).data.data(), n, kk);
                      AG.noalias() += G * B.transpose();
                    }
                    if (tp.needs_grad(Var{bid})) {
                      MapM<T> BG(tp.touch_grad(bid).data.data(), kk, m);
                      BG.noalias() += A.transpose() * G;
                    }
                  }
                });
}

// (N,A) ++ (N,B) -> (N,A+B)
template <class T>
Var concat_cols(TapeT<T>& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(0) != bv.dim(0)) {
    throw ConfigError("concat_cols: expected (N,A) and (N,B)");
  }
  const std::int64_t n = av.dim(0), ca = av.dim(1), cb = bv.dim(1);
  TensorT<T> out = TensorT<T>::zeros({n, ca + cb});
  for (std::int64_t i = 0; i < n; ++i) {
    std::copy(av.data.begin() + i * ca, av.data.begin() + (i + 1) * ca,
              out.data.begin() + i * (ca + cb));
    std::copy(bv.data.begin() + i * cb, bv.data.begin() + (i + 1) * cb,
              out.data.begin() + i * (ca + cb) + ca);
  }
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  const std::int32_t aid = a.id, bid = b.id;
  return t.emit(std::move(out), ng,
                [aid, bid, n, ca, cb](TapeT<T>& tp, std::int32_t self) {
                  const auto& g = tp.node(Var{self}).grad;
                  if (tp.needs_grad(Var{aid})) {
                    auto& ag = tp.touch_grad(aid);
                    for (std::int64_t i = 0; i < n; ++i) {
                      for (std::int64_t j = 0; j < ca; ++j) {
                        ag.data[static_cast<std::size_t>(i * ca + j)] +=
                            g.data[static_cast<std::size_t>(i * (ca + cb) + j)];
                      }
                    }
                  }
                  if (tp.needs_grad(Var{bid})) {
                    auto& bg = tp.touch_grad(bid);
                    for (std::int64_t i = 0; i < n; ++i) {
                      for (std::int64_t j = 0; j < cb; ++j) {
                        bg.data[static_cast<std::size_t>(i * cb + j)] +=
                            g.data[static_cast<std::size_t>(i * (ca + cb) + ca + j)];
                      }
                    }
                  }
                });
}

// Row-wise max-stabilized log-sum-exp: (N,M) -> (N,1).
template <class T>
Var rows_logsumexp(TapeT<T>& t, Var x) {
  const auto& xv = t.value(x);
  if (xv.rank() != 2) throw ConfigError("rows_logsumexp: rank-2 input required");
  const std::int64_t n = xv.dim(0), m = xv.dim(1);
  TensorT<T> out = TensorT<T>::zeros({n, 1});
  for (std::int64_t i = 0; i < n; ++i) {
    T mx = xv(i, 0);
    for (std::int64_t j = 1; j < m; ++j) mx = std::max(mx, xv(i, j));
    T acc = T(0);
    for (std::int64_t j = 0; j < m; ++j) acc += std::exp(xv(i, j) - mx);
    out(i, 0) = mx + std::log(acc);
  }
  const bool ng = t.needs_grad(x);
  const std::int32_t xid = x.id;
  return t.emit(std::move(out), ng,
                [xid, n, m](TapeT<T>& tp, std::int32_t self) {
                  if (!tp.needs_grad(Var{xid})) return;
                  const auto& g = tp.node(Var{self}).grad;
                  const auto& y = tp.node(Var{self}).value;
                  const auto& xval = tp.node(Var{xid}).value;
                  auto& xg = tp.touch_grad(xid);
                  for (std::int64_t i = 0; i < n; ++i) {
                    const T gi = g(i, 0);
                    if (gi == T(0)) continue;
                    for (std::int64_t j = 0; j < m; ++j) {
                      xg.data[static_cast<std::size_t>(i * m + j)] +=
                          std::exp(xval(i, j) - y(i, 0)) * gi;
                    }
                  }
                });
}

// Diagonal of a square matrix as a column: (N,N) -> (N,1).
template <class T>
Var take_diag(TapeT<T>& t, Var x) {
  const auto& xv = t.value(x);
  if (xv.rank() != 2 || xv.dim(0) != xv.dim(1)) throw ConfigError("take_diag: square input required");
  const std::int64_t n = xv.dim(0);
  TensorT<T> out = TensorT<T>::zeros({n, 1});
  for (std::int64_t i = 0; i < n; ++i) out(i, 0) = xv(i, i);
  const bool ng = t.needs_grad(x);
  const std::int32_t xid = x.id;
  return t.emit(std::move(out), ng,
                [xid, n](TapeT<T>& tp, std::int32_t self) {
                  if (!tp.needs_grad(Var{xid})) return;
                  const auto& g = tp.node(Var{self}).grad;
                  auto& xg = tp.touch_grad(xid);
                  for (std::int64_t i = 0; i < n; ++i) {
                    xg.data[static_cast<std::size_t>(i * n + i)] += g(i, 0);
                  }
                });
}

// (N,M) -> (N,1)
template <class T>
Var sum_rows(TapeT<T>& t, Var x) {
  const auto& xv = t.value(x);
  if (xv.rank() != 2) throw ConfigError("sum_rows: rank-2 input required");
  const std::int64_t n = xv.dim(0), m = xv.dim(1);
  TensorT<T> out = TensorT<T>::zeros({n, 1});
  for (std::int64_t i = 0; i < n; ++i) {
    T acc = T(0);
    for (std::int64_t j = 0; j < m; ++j) acc += xv(i, j);
    out(i, 0) = acc;
  }
  const bool ng = t.needs_grad(x);
  const std::int32_t xid = x.id;
  return t.emit(std::move(out), ng,
                [xid, n, m](TapeT<T>& tp, std::int32_t self) {
                  if (!tp.needs_grad(Var{xid})) return;
                  const auto& g = tp.node(Var{self}).grad;
                  auto& xg = tp.touch_grad(xid);
                  for (std::int64_t i = 0; i < n; ++i) {
                    for (std::int64_t j = 0; j < m; ++j) {
                      xg.data[static_cast<std::size_t>(i * m + j)] += g(i, 0);
                    }
                  }
                });
}

template <class T>
Var sum_all(TapeT<T>& t, Var x) {
  const auto& xv = t.value(x);
  T acc = T(0);
  for (T v : xv.data) acc += v;
  TensorT<T> out = TensorT<T>::scalar(acc);
  const bool ng = t.needs_grad(x);
  const std::int32_t xid = x.id;
  return t.emit(std::move(out), ng,
                [xid](TapeT<T>& tp, std::int32_t self) {
                  if (!tp.needs_grad(Var{xid})) return;
                  const T g = tp.node(Var{self}).grad.data[0];
                  auto& xg = tp.touch_grad(xid);
                  for (auto& v : xg.data) v += g;
                });
}

template <class T>
Var mean_all(TapeT<T>& t, Var x) {
  const std::int64_t n = t.value(x).numel();
  return mul_const(t, sum_all(t, x), T(1) / static_cast<T>(n));
}

// Row-wise layer normalization with learnable gain/bias: x (N,F), g (F), b (F).
template <class T>
Var layer_norm(TapeT<T>& t, Var x, Var gain, Var bias, T eps = T(1e-5)) {
  const auto& xv = t.value(x);
  const auto& gv = t.value(gain);
  const auto& bv = t.value(bias);
  if (xv.rank() != 2 || gv.rank() != 1 || bv.rank() != 1) {
    throw ConfigError("layer_norm: expected x (N,F), gain (F), bias (F)");
  }
  const std::int64_t n = xv.dim(0), f = xv.dim(1);
  if (gv.dim(0) != f || bv.dim(0) != f) throw ConfigError("layer_norm: gain/bias dimension mismatch");
  TensorT<T> out = TensorT<T>::zeros({n, f});
  for (std::int64_t i = 0; i < n; ++i) {
    T mu = T(0);
    for (std::int64_t j = 0; j < f; ++j) mu += xv(i, j);
    mu /= static_cast<T>(f);
    T var = T(0);
    for (std::int64_t j = 0; j < f; ++j) {
      const T d = xv(i, j) - mu;
      var += d * d;
    }
    var /= static_cast<T>(f);
    const T inv = T(1) / std::sqrt(var + eps);
    for (std::int64_t j = 0; j < f; ++j) {
      out(i, j) = (xv(i, j) - mu) * inv * gv(j) + bv(j);
    }
  }
  const bool ng = t.needs_grad(x) || t.needs_grad(gain) || t.needs_grad(bias);
  const std::int32_t xid = x.id, gid = gain.id, bid = bias.id;
  return t.emit(
      std::move(out), ng,
      [xid, gid, bid, n, f, eps](TapeT<T>& tp, std::int32_t self) {
        const auto& g = tp.node(Var{self}).grad;
        const auto& xval = tp.node(Var{xid}).value;
        const auto& gval = tp.node(Var{gid}).value;
        const bool need_x = tp.needs_grad(Var{xid});
        const bool need_g = tp.needs_grad(Var{gid});
        const bool need_b = tp.needs_grad(Var{bid});
        std::vector<T> xhat(static_cast<std::size_t>(f));
        for (std::int64_t i = 0; i < n; ++i) {
          T mu = T(0);
          for (std::int64_t j = 0; j < f; ++j) mu += xval(i, j);
          mu /= static_cast<T>(f);
          T var = T(0);
          for (std::int64_t j = 0; j < f; ++j) {
            const T d = xval(i, j) - mu;
            var += d * d;
          }
          var /= static_cast<T>(f);
          const T inv = T(1) / std::sqrt(var + eps);
          for (std::int64_t j = 0; j < f; ++j) xhat[static_cast<std::size_t>(j)] = (xval(i, j) - mu) * inv;
          if (need_b) {
            auto& bg = tp.touch_grad(bid);
            for (std::int64_t j = 0; j < f; ++j) bg(j) += g(i, j);
          }
          if (need_g) {
            auto& gg = tp.touch_grad(gid);
            for (std::int64_t j = 0; j < f; ++j) gg(j) += g(i, j) * xhat[static_cast<std::size_t>(j)];
          }
          if (need_x) {
            T sum_gdy = T(0), sum_gdy_xhat = T(0);
            for (std::int64_t j = 0; j < f; ++j) {
              const T gdy = gval(j) * g(i, j);
              sum_gdy += gdy;
              sum_gdy_xhat += gdy * xhat[static_cast<std::size_t>(j)];
            }
            auto& xg = tp.touch_grad(xid);
            const T invf = T(1) / static_cast<T>(f);
            for (std::int64_t j = 0; j < f; ++j) {
              const T gdy = gval(j) * g(i, j);
              xg.data[static_cast<std::size_t>(i * f + j)] +=
                  inv * (gdy - sum_gdy * invf - xhat[static_cast<std::size_t>(j)] * sum_gdy_xhat * invf);
            }
          }
        }
      });
}

}  // namespace ccfdm
