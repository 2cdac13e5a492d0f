#pragma once

#include <cmath>
#include <vector>

#include "klnmf/specfun.hpp"
#include "klnmf/types.hpp"

// Literal transcriptions of the textbook PLSA EM and LDA variational EM
// iterations. They materialize the responsibilities phi_vkd at every nonzero
// of X and share no code with the solvers; they exist to check the solvers.
// The same entry floor as the solvers is applied before each normalization.

namespace klnmf::reference {

namespace detail {

template <typename Scalar>
void floor_and_normalize(Matrix<Scalar>& M, double floor) {
  for (Index j = 0; j < M.cols(); ++j) {
    Scalar top = 0;
    for (Index i = 0; i < M.rows(); ++i) top = std::max(top, M(i, j));
    const Scalar level = Scalar(floor) * top;
    Scalar sum = 0;
    for (Index i = 0; i < M.rows(); ++i) {
      if (M(i, j) < level) M(i, j) = level;
      sum += M(i, j);
    }
    for (Index i = 0; i < M.rows(); ++i) M(i, j) /= sum;
  }
}

/// phi[s * K + k] ∝ W(v, k) * T(k, d) for every nonzero slot s = (v, d).
template <typename Scalar>
std::vector<Scalar> responsibilities(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Matrix<Scalar>& T) {
  const Index K = W.cols();
  std::vector<Scalar> phi(static_cast<std::size_t>(X.nnz() * K));
  for (Index d = 0; d < X.n_docs(); ++d) {
    for (Index s = X.doc_begin(d); s < X.doc_begin(d + 1); ++s) {
      const Index v = X.slot_term(s);
      Scalar norm = 0;
      for (Index k = 0; k < K; ++k) norm += W(v, k) * T(k, d);
      for (Index k = 0; k < K; ++k) phi[static_cast<std::size_t>(s * K + k)] = W(v, k) * T(k, d) / norm;
    }
  }
  return phi;
}

}  // namespace detail

template <typename Scalar>
struct PlsaState {
  Matrix<Scalar> W;
  Matrix<Scalar> H;
};

/// E-step phi ∝ w h; M-step w ∝ sum_d x phi, h ∝ sum_v x phi.
template <typename Scalar>
PlsaState<Scalar> plsa_em_step(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Matrix<Scalar>& H,
                               double floor = 1e-12) {
  const Index K = W.cols();
  const std::vector<Scalar> phi = detail::responsibilities(X, W, H);
  PlsaState<Scalar> next{Matrix<Scalar>::Zero(W.rows(), K), Matrix<Scalar>::Zero(K, H.cols())};
  for (Index d = 0; d < X.n_docs(); ++d) {
    for (Index s = X.doc_begin(d); s < X.doc_begin(d + 1); ++s) {
      const Index v = X.slot_term(s);
      for (Index k = 0; k < K; ++k) {
        const Scalar expected = X.slot_count(s) * phi[static_cast<std::size_t>(s * K + k)];
        next.W(v, k) += expected;
        next.H(k, d) += expected;
      }
    }
  }
  detail::floor_and_normalize(next.W, floor);
  detail::floor_and_normalize(next.H, floor);
  return next;
}

template <typename Scalar>
struct LdaState {
  Matrix<Scalar> W;
  Matrix<Scalar> beta;
};

/// h~ = exp(psi(beta) - psi(sum beta)); phi ∝ w h~; w ∝ sum_d x phi;
/// beta = alpha + sum_v x phi.
template <typename Scalar>
LdaState<Scalar> lda_vi_step(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Vector<Scalar>& alpha,
                             const Matrix<Scalar>& beta, double floor = 1e-12) {
  const Index K = W.cols();
  Matrix<Scalar> htilde(K, beta.cols());
  for (Index d = 0; d < beta.cols(); ++d) {
    Scalar total = 0;
    for (Index k = 0; k < K; ++k) total += beta(k, d);
    const Scalar psi_total = digamma(total);
    for (Index k = 0; k < K; ++k) htilde(k, d) = std::exp(digamma(beta(k, d)) - psi_total);
  }
  const std::vector<Scalar> phi = detail::responsibilities(X, W, htilde);
  LdaState<Scalar> next{Matrix<Scalar>::Zero(W.rows(), K), Matrix<Scalar>(K, beta.cols())};
  for (Index d = 0; d < beta.cols(); ++d)
    for (Index k = 0; k < K; ++k) next.beta(k, d) = alpha(k);
  for (Index d = 0; d < X.n_docs(); ++d) {
    for (Index s = X.doc_begin(d); s < X.doc_begin(d + 1); ++s) {
      const Index v = X.slot_term(s);
      for (Index k = 0; k < K; ++k) {
        const Scalar expected = X.slot_count(s) * phi[static_cast<std::size_t>(s * K + k)];
        next.W(v, k) += expected;
        next.beta(k, d) += expected;
      }
    }
  }
  detail::floor_and_normalize(next.W, floor);
  return next;
}

}  // namespace klnmf::reference
