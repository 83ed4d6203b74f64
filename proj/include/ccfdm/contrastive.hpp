#pragma once

#include <string>
#include <string_view>

#include "ccfdm/ops.hpp"

namespace ccfdm {

enum class SimilarityKind { kDot, kBilinear };

inline SimilarityKind parse_similarity(std::string_view s) {
  if (s == "dot") return SimilarityKind::kDot;
  if (s == "bilinear") return SimilarityKind::kBilinear;
  throw ConfigError("unknown similarity kind: " + std::string(s));
}

inline const char* to_string(SimilarityKind k) {
  return k == SimilarityKind::kDot ? "dot" : "bilinear";
}

// Learnable square matrix for the bilinear similarity q^T W k. Initialized to
// the identity so it coincides with the dot product before training.
template <class T>
struct BilinearWeightT {
  ParameterSetT<T> params;
  BilinearWeightT() = default;
  explicit BilinearWeightT(std::int64_t dim) { params.add("w", TensorT<T>::identity(dim)); }
  std::int64_t dim() const { return params.at("w").value.dim(0); }
};

// Scalar similarity between two latent vectors (off-tape).
template <class T>
T similarity(const TensorT<T>& q, const TensorT<T>& k, SimilarityKind kind,
             const BilinearWeightT<T>* bw = nullptr) {
  if (q.numel() != k.numel()) throw ConfigError("similarity: dimension mismatch");
  const std::int64_t d = q.numel();
  if (kind == SimilarityKind::kDot) {
    T acc = T(0);
    for (std::int64_t i = 0; i < d; ++i) acc += q.data[i] * k.data[i];
    return acc;
  }
  if (bw == nullptr) throw ConfigError("similarity: bilinear weight missing");
  const auto& w = bw->params.at("w").value;
  if (w.dim(0) != d || w.dim(1) != d) throw ConfigError("similarity: bilinear weight shape mismatch");
  T acc = T(0);
  for (std::int64_t i = 0; i < d; ++i) {
    T row = T(0);
    for (std::int64_t j = 0; j < d; ++j) row += w(i, j) * k.data[j];
    acc += q.data[i] * row;
  }
  return acc;
}

// Pairwise similarity logits between queries (K,d) on the tape and constant
// keys (K,d): logits[i][j] = sim(query_i, key_j). Keys never receive
// gradients; they enter as a constant leaf.
template <class T>
Var similarity_logits(TapeT<T>& t, Var queries, const TensorT<T>& keys, SimilarityKind kind,
                      BilinearWeightT<T>* bw, bool with_grad) {
  const auto& qv = t.value(queries);
  if (qv.rank() != 2 || keys.rank() != 2 || qv.dim(1) != keys.dim(1)) {
    throw ConfigError("similarity_logits: latent dimension mismatch");
  }
  Var keys_leaf = t.leaf(keys);
  if (kind == SimilarityKind::kDot) {
    return matmul(t, queries, keys_leaf, /*trans_b=*/true);
  }
  if (bw == nullptr) throw ConfigError("similarity_logits: bilinear weight missing");
  Var w = t.param(bw->params, "w", with_grad);
  Var qw = matmul(t, queries, w);
  return matmul(t, qw, keys_leaf, /*trans_b=*/true);
}

// InfoNCE over a (K,K) logit matrix whose diagonal holds the positive pairs:
// mean_i [ logsumexp_j logits[i][j] - logits[i][i] ].
template <class T>
Var info_nce_loss(TapeT<T>& t, Var logits) {
  const auto& lv = t.value(logits);
  if (lv.rank() != 2 || lv.dim(0) != lv.dim(1)) {
    throw ConfigError("info_nce_loss: square logit matrix required");
  }
  if (lv.dim(0) < 1) throw ConfigError("info_nce_loss: batch must be non-empty");
  if (!lv.all_finite()) throw NumericsError("info_nce_loss: non-finite similarity");
  Var lse = rows_logsumexp(t, logits);
  Var pos = take_diag(t, logits);
  return mean_all(t, sub(t, lse, pos));
}

}  // namespace ccfdm
