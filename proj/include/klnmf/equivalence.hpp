#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "klnmf/mu_solvers.hpp"
#include "klnmf/objectives.hpp"
#include "klnmf/reconstruct.hpp"
#include "klnmf/types.hpp"
#include "klnmf/vi_solvers.hpp"

// Maps between the unconstrained, W-simplex, both-simplex, sparse and
// Bayesian formulations. Statements about global optima cannot be checked
// numerically; what these maps guarantee is exact preservation of the product
// WH (or a known additive shift of the objective), and transfer of fixed
// points between the corresponding iterations.

namespace klnmf {

/// A raw (W, H) pair. Maps whose output lies on a constraint set only at
/// fixed points return this instead of a validated Factorization.
template <typename Scalar>
struct FactorPair {
  Matrix<Scalar> W;
  Matrix<Scalar> H;
};

/// Moves the column sums of W into the rows of H: w~ = w / lambda_k,
/// h~ = lambda_k h. The product is unchanged.
template <typename Scalar>
Factorization<Scalar> absorb_scaling(const Matrix<Scalar>& W, const Matrix<Scalar>& H) {
  if (W.cols() != H.rows()) throw DataError("absorb_scaling: inner dimensions differ");
  auto [W_norm, scales] = normalize_columns(W);
  Matrix<Scalar> H_scaled = scales.asDiagonal() * H;
  return Factorization<Scalar>(std::move(W_norm), std::move(H_scaled), ConstraintMode::WSimplex);
}

namespace detail {

template <typename Scalar>
const Vector<Scalar>& document_totals(const TermDocMatrix<Scalar>& X, Index h_cols) {
  if (h_cols != X.n_docs()) throw DataError("H has " + std::to_string(h_cols) + " columns, X has " +
                                            std::to_string(X.n_docs()) + " documents");
  const Vector<Scalar>& totals = X.column_sums();
  for (Index d = 0; d < totals.size(); ++d)
    if (!(totals(d) > 0)) throw DataError("zero-sum document column " + std::to_string(d));
  return totals;
}

}  // namespace detail

/// W-simplex model -> both-simplex model: h_kd / lambda_d with
/// lambda_d = sum_v x_vd. The columns of the result sum to one exactly when
/// sum_k h_kd = lambda_d, which every iterate n >= 1 of the joint W-simplex
/// updates (and hence every fixed point) satisfies; for arbitrary input no
/// simplex membership is claimed.
template <typename Scalar>
FactorPair<Scalar> map_c1_to_c2(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Matrix<Scalar>& H) {
  const Vector<Scalar>& totals = detail::document_totals(X, H.cols());
  return {W, H * totals.cwiseInverse().asDiagonal()};
}

/// Inverse of map_c1_to_c2: h_kd * lambda_d.
template <typename Scalar>
FactorPair<Scalar> map_c2_to_c1(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Matrix<Scalar>& H) {
  const Vector<Scalar>& totals = detail::document_totals(X, H.cols());
  return {W, H * totals.asDiagonal()};
}

enum class Direction { Forward, Inverse };

/// Plain W-simplex model <-> l1-penalized model: H / (1 + lambda) forward,
/// H * (1 + lambda) inverse.
template <typename Scalar>
FactorPair<Scalar> map_sparse_solution(const Matrix<Scalar>& W, const Matrix<Scalar>& H, Scalar lambda,
                                       Direction direction) {
  if (!(lambda >= 0)) throw UsageError("lambda must be >= 0");
  const Scalar factor = direction == Direction::Forward ? Scalar(1) / (Scalar(1) + lambda) : Scalar(1) + lambda;
  return {W, H * factor};
}

/// LDA state -> Gamma-Poisson state (attach b = 1 + a) and back (drop b).
/// With `require_uniform_rate` the call refuses non-uniform rates, for which
/// the two iterations are not identical.
template <typename Scalar>
VariationalState<Scalar> map_gap_lda_state(const VariationalState<Scalar>& state, const Priors<Scalar>& priors,
                                           Direction direction, bool require_uniform_rate = true) {
  if (direction == Direction::Inverse) return VariationalState<Scalar>(state.beta);
  if (!priors.has_rate()) throw DataError("map_gap_lda_state needs rate_a");
  if (require_uniform_rate && !priors.uniform_rate()) {
    throw DataError("rate_a is not uniform across topics; Gamma-Poisson and LDA iterates differ");
  }
  if (priors.n_topics() != state.beta.rows()) throw DataError("rate_a has the wrong number of topics");
  return VariationalState<Scalar>(state.beta, stationary_rates(priors, state.beta.cols()));
}

/// D_p(W) = diag(||w_1||_p, ..., ||w_K||_p).
template <typename Scalar>
struct NormalizationMatrix {
  Scalar p;
  Vector<Scalar> scales;
};

template <typename Scalar>
NormalizationMatrix<Scalar> normalization_matrix(const Matrix<Scalar>& W, Scalar p) {
  if (!(p > 0) || !std::isfinite(static_cast<double>(p))) throw UsageError("exponent p must lie in (0, inf)");
  NormalizationMatrix<Scalar> out{p, Vector<Scalar>(W.cols())};
  for (Index k = 0; k < W.cols(); ++k) {
    out.scales(k) = std::pow(W.col(k).array().pow(p).sum(), Scalar(1) / p);
    if (!(out.scales(k) > 0)) throw DataError("degenerate column " + std::to_string(k));
  }
  return out;
}

template <typename Scalar>
using Penalty = std::function<Scalar(const Matrix<Scalar>&)>;

/// R(H) = lambda * ||H||_q^q = lambda * sum h^q.
template <typename Scalar>
Penalty<Scalar> lq_penalty(Scalar lambda, Scalar q) {
  return [lambda, q](const Matrix<Scalar>& H) { return lambda * H.array().pow(q).sum(); };
}

template <typename Scalar>
Penalty<Scalar> l1_penalty(Scalar lambda) {
  return [lambda](const Matrix<Scalar>& H) { return lambda * H.sum(); };
}

template <typename Scalar>
struct PenaltyAbsorption {
  NormalizationMatrix<Scalar> normalization;
  Matrix<Scalar> W;  ///< W D_p^{-1}, columns of unit l_p norm
  Matrix<Scalar> H;  ///< D_p H
  /// KL(X || WH) + R(D_p(W) H) at the input pair.
  Scalar reformulated_objective;
  /// KL(X || W~H~) + R(H~) at the mapped pair.
  Scalar constrained_objective;
};

/// Moves the l_p column norms of W into H. The unconstrained problem with
/// penalty R(D_p(W) H) and the l_p-constrained problem with penalty R(H) take
/// the same value on the input and the mapped pair respectively.
template <typename Scalar>
PenaltyAbsorption<Scalar> absorb_penalty_general(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W,
                                                 const Matrix<Scalar>& H, Scalar p, const Penalty<Scalar>& penalty) {
  detail::require_shapes(X, W, H.rows(), H.cols());
  NormalizationMatrix<Scalar> norm = normalization_matrix(W, p);
  Matrix<Scalar> scaled_H = norm.scales.asDiagonal() * H;
  Matrix<Scalar> unit_W = W * norm.scales.cwiseInverse().asDiagonal();
  const Scalar reformulated = kl_divergence(X, W, H) + penalty(scaled_H);
  const Scalar constrained = kl_divergence(X, unit_W, scaled_H) + penalty(scaled_H);
  return {std::move(norm), std::move(unit_W), std::move(scaled_H), reformulated, constrained};
}

/// Max-norm of the parameter change produced by one step of `method` started
/// at (W, H); the pair must satisfy that method's constraint set.
template <typename Scalar>
Scalar fixed_point_residual(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Matrix<Scalar>& H,
                            Method method, Scalar lambda = 0, const StepOptions& opts = {}) {
  const Factorization<Scalar> model(W, H, constraint_mode_for(method));
  const StepOutcome<Scalar> step = mu_step(method, X, model, lambda, opts);
  return std::max((step.model.W() - W).cwiseAbs().maxCoeff(), (step.model.H() - H).cwiseAbs().maxCoeff());
}

/// Same for the variational iterations, over (W, beta).
template <typename Scalar>
Scalar fixed_point_residual(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Priors<Scalar>& priors,
                            const VariationalState<Scalar>& state, Method method, const StepOptions& opts = {}) {
  const ViStepOutcome<Scalar> step = vi_step(method, X, W, priors, state, opts);
  Scalar residual = std::max((step.W - W).cwiseAbs().maxCoeff(), (step.state.beta - state.beta).cwiseAbs().maxCoeff());
  if (state.b_rate && step.state.b_rate)
    residual = std::max(residual, (*step.state.b_rate - *state.b_rate).cwiseAbs().maxCoeff());
  return residual;
}

}  // namespace klnmf
