#pragma once

// Entropy, divergences and softmax over Eigen expressions. Rows of a
// prediction matrix are distributions; all logs are natural (nats).

#include "pflat/core.hpp"

#include <algorithm>
#include <cmath>

namespace pflat {

template <typename Derived>
VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  const S shift = logits.maxCoeff();
  VectorX<S> e = (logits.array() - shift).exp().matrix();
  return e / e.sum();
}

/// -sum p log p with 0 log 0 = 0.
template <typename Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& p) {
  using S = typename Derived::Scalar;
  S h = 0;
  for (Index i = 0; i < p.size(); ++i) {
    const S v = p(i);
    if (v > 0) h -= v * std::log(std::max<S>(v, kProbabilityFloor));
  }
  return h;
}

/// KL(p || q) = sum p (log p - log q); both sides floored, terms with p = 0
/// dropped. Identical arguments give exactly 0.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kl_divergence(const Eigen::MatrixBase<DerivedP>& p,
                                        const Eigen::MatrixBase<DerivedQ>& q) {
  using S = typename DerivedP::Scalar;
  S d = 0;
  for (Index i = 0; i < p.size(); ++i) {
    const S pi = p(i);
    if (pi > 0) d += pi * (std::log(std::max<S>(pi, kProbabilityFloor)) - std::log(std::max<S>(q(i), kProbabilityFloor)));
  }
  return d;
}

/// -sum p log q with q floored.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar cross_entropy(const Eigen::MatrixBase<DerivedP>& p,
                                        const Eigen::MatrixBase<DerivedQ>& q) {
  using S = typename DerivedP::Scalar;
  S d = 0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0) d -= p(i) * std::log(std::max<S>(q(i), kProbabilityFloor));
  }
  return d;
}

/// H(mean row) - mean H(row). Tiny negatives from rounding in [-1e-9, 0) are
/// clamped to 0.
template <typename Derived>
typename Derived::Scalar mutual_information(const Eigen::MatrixBase<Derived>& predictions) {
  using S = typename Derived::Scalar;
  const Index n = predictions.rows();
  const VectorX<S> marginal = predictions.colwise().mean().transpose();
  S conditional = 0;
  for (Index i = 0; i < n; ++i) conditional += entropy(predictions.row(i).transpose());
  conditional /= static_cast<S>(n);
  S mi = entropy(marginal) - conditional;
  if (mi < 0 && mi >= S(-1e-9)) mi = 0;
  return mi;
}

/// Index of the largest entry; ties go to the lowest index (the
/// lexicographically smallest label).
template <typename Derived>
Index argmax(const Eigen::MatrixBase<Derived>& p) {
  Index best = 0;
  for (Index i = 1; i < p.size(); ++i) {
    if (p(i) > p(best)) best = i;
  }
  return best;
}

/// Total variation distance, 0.5 * sum |p - q|.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar total_variation(const Eigen::MatrixBase<DerivedP>& p,
                                          const Eigen::MatrixBase<DerivedQ>& q) {
  return typename DerivedP::Scalar(0.5) * (p - q).cwiseAbs().sum();
}

}  // namespace pflat
