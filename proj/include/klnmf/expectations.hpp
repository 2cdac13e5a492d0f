#pragma once

#include <cmath>

#include "klnmf/specfun.hpp"
#include "klnmf/types.hpp"

namespace klnmf {

/// E_q[log h_kd] under q(h_d) = Dirichlet(beta_d): psi(beta_kd) - psi(sum_k beta_kd).
template <typename Scalar>
Matrix<Scalar> expected_log_dirichlet(const Matrix<Scalar>& beta) {
  detail::require_positive(beta, "beta");
  Matrix<Scalar> out(beta.rows(), beta.cols());
  for (Index d = 0; d < beta.cols(); ++d) {
    const Scalar psi_total = digamma(beta.col(d).sum());
    for (Index k = 0; k < beta.rows(); ++k) out(k, d) = digamma(beta(k, d)) - psi_total;
  }
  return out;
}

/// E_q[log h_kd] under q(h_kd) = Gamma(beta_kd, b_kd): psi(beta_kd) - log b_kd.
template <typename Scalar>
Matrix<Scalar> expected_log_gamma(const Matrix<Scalar>& beta, const Matrix<Scalar>& b_rate) {
  detail::require_positive(beta, "beta");
  detail::require_positive(b_rate, "b_rate");
  if (beta.rows() != b_rate.rows() || beta.cols() != b_rate.cols()) throw DataError("beta/b_rate shape mismatch");
  return beta.unaryExpr([](Scalar x) { return digamma(x); }) - b_rate.array().log().matrix();
}

/// h~ = exp(E_q[log h]) for the Dirichlet variational family. Every entry of
/// a column lies in (0, 1).
template <typename Scalar>
Matrix<Scalar> expected_log_h_dirichlet(const Matrix<Scalar>& beta) {
  return expected_log_dirichlet(beta).array().exp().matrix();
}

/// h~ = exp(psi(beta)) / b for the Gamma variational family.
template <typename Scalar>
Matrix<Scalar> expected_log_h_gamma(const Matrix<Scalar>& beta, const Matrix<Scalar>& b_rate) {
  detail::require_positive(beta, "beta");
  detail::require_positive(b_rate, "b_rate");
  if (beta.rows() != b_rate.rows() || beta.cols() != b_rate.cols()) throw DataError("beta/b_rate shape mismatch");
  return (beta.unaryExpr([](Scalar x) { return std::exp(digamma(x)); }).array() / b_rate.array()).matrix();
}

}  // namespace klnmf
