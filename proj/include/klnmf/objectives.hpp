#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "klnmf/expectations.hpp"
#include "klnmf/reconstruct.hpp"
#include "klnmf/specfun.hpp"
#include "klnmf/types.hpp"

// Objectives, bounds and marginal likelihoods. Values that are documented as
// "excluding data-only constants" drop terms depending on X alone (log x!,
// the bag-of-words constant); the generalized KL divergence is complete.
// 0 log 0 is taken as 0 throughout.

namespace klnmf {

namespace detail {

template <typename Scalar>
void require_shapes(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, Index h_rows, Index h_cols) {
  if (W.rows() != X.n_terms() || h_cols != X.n_docs() || W.cols() != h_rows) {
    throw DataError("shape mismatch: X is " + std::to_string(X.n_terms()) + "x" + std::to_string(X.n_docs()) +
                    ", W is " + std::to_string(W.rows()) + "x" + std::to_string(W.cols()) + ", H is " +
                    std::to_string(h_rows) + "x" + std::to_string(h_cols));
  }
}

template <typename Scalar>
Scalar xlogx(Scalar x) {
  return x > 0 ? x * std::log(x) : Scalar(0);
}

/// sum over nonzeros of x log (W M)_vd; `what` names the failure when the
/// reconstruction vanishes at a nonzero.
template <typename Scalar>
Scalar weighted_log_reconstruction(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Matrix<Scalar>& M,
                                   const char* what) {
  Scalar total = 0;
  for (Index d = 0; d < X.n_docs(); ++d) {
    for (Index s = X.doc_begin(d); s < X.doc_begin(d + 1); ++s) {
      const Scalar y = W.row(X.slot_term(s)).dot(M.col(d));
      if (!(y > 0)) throw InfiniteDivergenceError(X.slot_term(s), d, what);
      total += X.slot_count(s) * std::log(y);
    }
  }
  return total;
}

}  // namespace detail

/// Generalized KL divergence sum x log(x / WH) - x + WH over all (v, d).
template <typename Scalar>
Scalar kl_divergence(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Matrix<Scalar>& H) {
  detail::require_shapes(X, W, H.rows(), H.cols());
  Scalar total = 0;
  for (Index d = 0; d < X.n_docs(); ++d) {
    for (Index s = X.doc_begin(d); s < X.doc_begin(d + 1); ++s) {
      const Scalar x = X.slot_count(s);
      const Scalar y = W.row(X.slot_term(s)).dot(H.col(d));
      if (!(y > 0)) throw InfiniteDivergenceError(X.slot_term(s), d, "infinite divergence");
      total += x * std::log(x / y) - x;
    }
  }
  return total + reconstruction_total(W, H);
}

template <typename Scalar>
Scalar kl_divergence(const TermDocMatrix<Scalar>& X, const Factorization<Scalar>& f) {
  return kl_divergence(X, f.W(), f.H());
}

/// KL + lambda * ||H||_1.
template <typename Scalar>
Scalar penalized_kl(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Matrix<Scalar>& H,
                    Scalar lambda) {
  return kl_divergence(X, W, H) + lambda * H.sum();
}

/// sum x log (WH) over the nonzeros of X; excludes the bag-of-words constant.
template <typename Scalar>
Scalar plsa_log_likelihood(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Matrix<Scalar>& H) {
  detail::require_shapes(X, W, H.rows(), H.cols());
  return detail::weighted_log_reconstruction(X, W, H, "infinite divergence");
}

/// sum x log x - x: the part of the KL divergence that depends on X only.
template <typename Scalar>
Scalar data_entropy_term(const TermDocMatrix<Scalar>& X) {
  Scalar total = 0;
  for (Index s = 0; s < X.nnz(); ++s) total += detail::xlogx(X.slot_count(s)) - X.slot_count(s);
  return total;
}

/// Variational lower bound of LDA / the Dirichlet-Poisson model with the
/// responsibilities at their optimum phi_vkd ∝ w_vk h~_kd (then the
/// responsibility term collapses to sum x log (W H~)). Data-only constants are
/// excluded.
template <typename Scalar>
Scalar lda_elbo(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Priors<Scalar>& priors,
                const VariationalState<Scalar>& state) {
  const Matrix<Scalar>& beta = state.beta;
  detail::require_shapes(X, W, beta.rows(), beta.cols());
  if (priors.n_topics() != W.cols()) throw DataError("alpha has the wrong number of topics");
  detail::require_nonnegative(W, "W");
  detail::require_unit_columns(W, "W");

  const Matrix<Scalar> elog = expected_log_dirichlet(beta);
  const Matrix<Scalar> htilde = elog.array().exp().matrix();
  Scalar bound = detail::weighted_log_reconstruction(X, W, htilde, "unrepresentable term");

  const Vector<Scalar>& alpha = priors.alpha;
  Scalar lgamma_alpha = 0;
  for (Index k = 0; k < alpha.size(); ++k) lgamma_alpha += log_gamma(alpha(k));
  const Scalar lgamma_alpha_total = log_gamma(alpha.sum());

  for (Index d = 0; d < beta.cols(); ++d) {
    bound += lgamma_alpha_total - log_gamma(beta.col(d).sum()) - lgamma_alpha;
    for (Index k = 0; k < beta.rows(); ++k)
      bound += log_gamma(beta(k, d)) + (alpha(k) - beta(k, d)) * elog(k, d);
  }
  return bound;
}

/// Variational lower bound of the Gamma-Poisson model with optimal
/// responsibilities; data-only constants excluded.
template <typename Scalar>
Scalar gap_elbo(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Priors<Scalar>& priors,
                const VariationalState<Scalar>& state) {
  const Matrix<Scalar>& beta = state.beta;
  detail::require_shapes(X, W, beta.rows(), beta.cols());
  if (priors.n_topics() != W.cols()) throw DataError("alpha has the wrong number of topics");
  if (!priors.has_rate()) throw DataError("gap_elbo needs Gamma rates rate_a");
  if (!state.b_rate) throw DataError("gap_elbo needs variational rates b_rate");
  detail::require_nonnegative(W, "W");
  detail::require_unit_columns(W, "W");

  const Matrix<Scalar>& b = *state.b_rate;
  const Matrix<Scalar> elog = expected_log_gamma(beta, b);
  const Matrix<Scalar> mean = (beta.array() / b.array()).matrix();
  const Matrix<Scalar> htilde = elog.array().exp().matrix();
  Scalar bound = detail::weighted_log_reconstruction(X, W, htilde, "unrepresentable term");

  const Vector<Scalar>& alpha = priors.alpha;
  const Vector<Scalar>& a = priors.rate_a;
  for (Index d = 0; d < beta.cols(); ++d) {
    for (Index k = 0; k < beta.rows(); ++k) {
      bound += -mean(k, d) + alpha(k) * std::log(a(k)) - beta(k, d) * std::log(b(k, d)) + log_gamma(beta(k, d)) -
               log_gamma(alpha(k)) + (alpha(k) - beta(k, d)) * elog(k, d) + (b(k, d) - a(k)) * mean(k, d);
    }
  }
  return bound;
}

/// Joint majorizer of the KL divergence anchored at (Wa, Ha):
///   G = -sum x phi' log(w h / phi') + sum (WH),  phi'_vkd = wa_vk ha_kd / (Wa Ha)_vd,
/// plus the data term sum (x log x - x), so that G equals kl_divergence at the
/// anchor and G >= kl_divergence everywhere. Returns +inf when the candidate
/// assigns zero mass where the anchor does not.
template <typename Scalar>
Scalar joint_aux(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Matrix<Scalar>& H,
                 const Matrix<Scalar>& Wa, const Matrix<Scalar>& Ha) {
  detail::require_shapes(X, W, H.rows(), H.cols());
  detail::require_shapes(X, Wa, Ha.rows(), Ha.cols());
  if (W.cols() != Wa.cols()) throw DataError("candidate and anchor have different topic counts");
  Scalar total = data_entropy_term(X) + reconstruction_total(W, H);
  for (Index d = 0; d < X.n_docs(); ++d) {
    for (Index s = X.doc_begin(d); s < X.doc_begin(d + 1); ++s) {
      const Index v = X.slot_term(s);
      const Scalar anchor = Wa.row(v).dot(Ha.col(d));
      if (!(anchor > 0)) throw InfiniteDivergenceError(v, d, "anchor reconstruction is zero");
      Scalar inner = 0;
      for (Index k = 0; k < W.cols(); ++k) {
        const Scalar phi = Wa(v, k) * Ha(k, d) / anchor;
        if (phi == 0) continue;
        const Scalar wh = W(v, k) * H(k, d);
        if (!(wh > 0)) return std::numeric_limits<Scalar>::infinity();
        inner += phi * std::log(wh / phi);
      }
      total -= X.slot_count(s) * inner;
    }
  }
  return total;
}

/// log p(x | W, h) with x_v ~ Poisson((Wh)_v) independently, including the
/// 1/x_v! terms.
template <typename Scalar>
Scalar poisson_marginal_loglik(const Vector<Scalar>& x, const Matrix<Scalar>& W, const Vector<Scalar>& h) {
  if (W.rows() != x.size() || W.cols() != h.size()) throw DataError("poisson_marginal_loglik: shape mismatch");
  detail::require_nonnegative(W, "W");
  detail::require_nonnegative(h, "h");
  detail::require_nonnegative(x, "x");
  const Vector<Scalar> rate = W * h;
  Scalar total = -rate.sum();
  for (Index v = 0; v < x.size(); ++v) {
    if (x(v) == 0) continue;
    if (!(rate(v) > 0)) throw InfiniteDivergenceError(v, 0, "infinite divergence");
    total += x(v) * std::log(rate(v)) - log_gamma(x(v) + Scalar(1));
  }
  return total;
}

/// log p(x | W, h, N) with x ~ Multinomial(N, p ∝ Wh).
template <typename Scalar>
Scalar multinomial_marginal_loglik(const Vector<Scalar>& x, const Matrix<Scalar>& W, const Vector<Scalar>& h,
                                   Scalar N) {
  if (W.rows() != x.size() || W.cols() != h.size()) throw DataError("multinomial_marginal_loglik: shape mismatch");
  detail::require_nonnegative(W, "W");
  detail::require_nonnegative(h, "h");
  detail::require_nonnegative(x, "x");
  if (std::abs(x.sum() - N) > Scalar(1e-9) * std::max(Scalar(1), std::abs(N))) {
    throw DataError("count mismatch: counts sum to " + std::to_string(static_cast<double>(x.sum())) + ", N = " +
                    std::to_string(static_cast<double>(N)));
  }
  const Vector<Scalar> rate = W * h;
  const Scalar mass = rate.sum();
  Scalar total = log_gamma(N + Scalar(1));
  for (Index v = 0; v < x.size(); ++v) {
    if (x(v) == 0) continue;
    if (!(rate(v) > 0)) throw InfiniteDivergenceError(v, 0, "infinite divergence");
    total += x(v) * std::log(rate(v) / mass) - log_gamma(x(v) + Scalar(1));
  }
  return total;
}

}  // namespace klnmf
