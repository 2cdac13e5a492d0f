#pragma once

#include <string>
#include <utility>

#include "klnmf/parallel.hpp"
#include "klnmf/types.hpp"

namespace klnmf {

/// (WH)_{vd} = sum_k w_vk h_kd.
template <typename DerivedW, typename DerivedH>
typename DerivedW::Scalar reconstruct_at(const Eigen::MatrixBase<DerivedW>& W, const Eigen::MatrixBase<DerivedH>& H,
                                         Index v, Index d) {
  if (W.cols() != H.rows()) throw DataError("reconstruct_at: inner dimensions differ");
  if (v < 0 || v >= W.rows() || d < 0 || d >= H.cols()) {
    throw DataError("reconstruct_at: index (" + std::to_string(v) + ", " + std::to_string(d) + ") out of range");
  }
  return W.row(v).dot(H.col(d));
}

template <typename Derived>
Vector<typename Derived::Scalar> column_sums(const Eigen::MatrixBase<Derived>& M) {
  return M.colwise().sum().transpose();
}

template <typename Scalar>
struct NormalizedColumns {
  Matrix<Scalar> matrix;
  Vector<Scalar> scales;
};

/// Divides every column by its sum. `matrix * scales.asDiagonal()` gives back
/// the input.
template <typename Derived>
NormalizedColumns<typename Derived::Scalar> normalize_columns(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  NormalizedColumns<Scalar> out{M, column_sums(M)};
  for (Index k = 0; k < M.cols(); ++k) {
    if (!(out.scales(k) > 0)) throw DataError("degenerate column " + std::to_string(k));
    out.matrix.col(k) /= out.scales(k);
  }
  return out;
}

/// sum_v (WH)_vd for every d without forming WH.
template <typename Scalar>
Vector<Scalar> reconstruction_column_sums(const Matrix<Scalar>& W, const Matrix<Scalar>& H) {
  return H.transpose() * column_sums(W);
}

/// sum_{v,d} (WH)_vd without forming WH.
template <typename Scalar>
Scalar reconstruction_total(const Matrix<Scalar>& W, const Matrix<Scalar>& H) {
  return column_sums(W).dot(H.rowwise().sum());
}

/// (WH) evaluated at the nonzeros of X, aligned with X's value slots.
template <typename Scalar>
Vector<Scalar> reconstruct_at_nonzeros(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W,
                                       const Matrix<Scalar>& H, int threads = 1) {
  Vector<Scalar> out(X.nnz());
  detail::parallel_for(X.n_docs(), threads, [&](Index d) {
    for (Index s = X.doc_begin(d); s < X.doc_begin(d + 1); ++s) out(s) = W.row(X.slot_term(s)).dot(H.col(d));
  });
  return out;
}

namespace detail {

/// r_vd = x_vd / (WH)_vd at every nonzero of X: one full reconstruction.
template <typename Scalar>
Vector<Scalar> ratio_pass(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Matrix<Scalar>& H,
                          int threads) {
  Vector<Scalar> ratio(X.nnz());
  parallel_for(X.n_docs(), threads, [&](Index d) {
    for (Index s = X.doc_begin(d); s < X.doc_begin(d + 1); ++s) {
      const Scalar y = W.row(X.slot_term(s)).dot(H.col(d));
      if (!(y > 0)) throw InfiniteDivergenceError(X.slot_term(s), d, "zero reconstruction at a nonzero of X");
      ratio(s) = X.slot_count(s) / y;
    }
  });
  return ratio;
}

/// (W^T R)_kd = sum_v r_vd w_vk, accumulated per document.
template <typename Scalar>
Matrix<Scalar> topic_numerators(const TermDocMatrix<Scalar>& X, const Vector<Scalar>& ratio,
                                const Matrix<Scalar>& W, int threads) {
  Matrix<Scalar> out = Matrix<Scalar>::Zero(W.cols(), X.n_docs());
  parallel_for(X.n_docs(), threads, [&](Index d) {
    for (Index s = X.doc_begin(d); s < X.doc_begin(d + 1); ++s)
      out.col(d).noalias() += ratio(s) * W.row(X.slot_term(s)).transpose();
  });
  return out;
}

/// (R H^T)_vk = sum_d r_vd h_kd, accumulated per word over documents in
/// increasing order regardless of the worker count.
template <typename Scalar>
Matrix<Scalar> word_numerators(const TermDocMatrix<Scalar>& X, const Vector<Scalar>& ratio,
                               const Matrix<Scalar>& H, int threads) {
  Matrix<Scalar> out = Matrix<Scalar>::Zero(X.n_terms(), H.rows());
  parallel_for(X.n_terms(), threads, [&](Index v) {
    for (Index p = X.term_begin(v); p < X.term_begin(v + 1); ++p)
      out.row(v).noalias() += ratio(X.row_slot(p)) * H.col(X.row_doc(p)).transpose();
  });
  return out;
}

/// Raises entries below floor * (column max) to that level.
template <typename Scalar>
void apply_floor(Matrix<Scalar>& M, double floor) {
  if (floor <= 0) return;
  for (Index k = 0; k < M.cols(); ++k) {
    const Scalar level = Scalar(floor) * M.col(k).maxCoeff();
    M.col(k) = M.col(k).cwiseMax(level);
  }
}

/// Normalizes columns in place; a zero column is a dead topic.
template <typename Scalar>
void normalize_topics(Matrix<Scalar>& M) {
  for (Index k = 0; k < M.cols(); ++k) {
    const Scalar s = M.col(k).sum();
    if (!(s > 0) || !std::isfinite(static_cast<double>(s))) throw DeadTopicError(k);
    M.col(k) /= s;
  }
}

}  // namespace detail
}  // namespace klnmf
