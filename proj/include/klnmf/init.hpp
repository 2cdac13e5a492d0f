#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "klnmf/types.hpp"

namespace klnmf {

namespace detail {

/// Strictly positive Exp(1) draw from the raw 64-bit engine output, so the
/// stream is the same on every standard library.
inline double standard_exponential(std::mt19937_64& rng) {
  const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;  // (0, 1)
  return -std::log1p(-u);
}

}  // namespace detail

/// Seeded starting point for the multiplicative solvers.
///
/// Columns of W are symmetric Dirichlet(1) draws. H entries are Gamma(1, 1)
/// draws, rescaled per document so that sum_k h_kd = lambda_d for the
/// unconstrained and W-simplex modes, or 1 for the both-simplex mode. Draw
/// order is W column-major, then H column-major.
template <typename Scalar>
Factorization<Scalar> random_factorization(const TermDocMatrix<Scalar>& X, Index K, ConstraintMode mode,
                                           std::uint64_t seed) {
  if (K < 1) throw UsageError("number of topics must be >= 1");
  std::mt19937_64 rng(seed);
  Matrix<Scalar> W(X.n_terms(), K);
  for (Index k = 0; k < K; ++k) {
    for (Index v = 0; v < W.rows(); ++v) W(v, k) = Scalar(detail::standard_exponential(rng));
    W.col(k) /= W.col(k).sum();
  }
  Matrix<Scalar> H(K, X.n_docs());
  for (Index d = 0; d < H.cols(); ++d) {
    for (Index k = 0; k < K; ++k) H(k, d) = Scalar(detail::standard_exponential(rng));
    H.col(d) /= H.col(d).sum();
    if (mode != ConstraintMode::BothSimplex) {
      const Scalar lambda = X.column_sums()(d);
      if (lambda > 0) H.col(d) *= lambda;
    }
  }
  return Factorization<Scalar>(std::move(W), std::move(H), mode);
}

/// beta0_kd = alpha_k + lambda_d / K.
template <typename Scalar>
Matrix<Scalar> default_beta(const TermDocMatrix<Scalar>& X, const Priors<Scalar>& priors) {
  const Index K = priors.n_topics();
  Matrix<Scalar> beta(K, X.n_docs());
  for (Index d = 0; d < X.n_docs(); ++d) beta.col(d) = priors.alpha.array() + X.column_sums()(d) / Scalar(K);
  return beta;
}

/// beta0_kd = alpha_k + lambda_d * g_kd with g_d a Dirichlet(1) draw.
template <typename Scalar>
Matrix<Scalar> perturbed_beta(const TermDocMatrix<Scalar>& X, const Priors<Scalar>& priors, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Index K = priors.n_topics();
  Matrix<Scalar> beta(K, X.n_docs());
  for (Index d = 0; d < X.n_docs(); ++d) {
    Vector<Scalar> g(K);
    for (Index k = 0; k < K; ++k) g(k) = Scalar(detail::standard_exponential(rng));
    beta.col(d) = priors.alpha.array() + X.column_sums()(d) * (g / g.sum()).array();
  }
  return beta;
}

/// Seeded column-normalized W for the variational solvers (same stream as
/// the W part of random_factorization).
template <typename Scalar>
Matrix<Scalar> random_topics(Index V, Index K, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix<Scalar> W(V, K);
  for (Index k = 0; k < K; ++k) {
    for (Index v = 0; v < V; ++v) W(v, k) = Scalar(detail::standard_exponential(rng));
    W.col(k) /= W.col(k).sum();
  }
  return W;
}

}  // namespace klnmf
