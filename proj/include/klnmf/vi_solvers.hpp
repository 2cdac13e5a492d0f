#pragma once

#include <chrono>
#include <cmath>
#include <string>

#include "klnmf/expectations.hpp"
#include "klnmf/mu_solvers.hpp"
#include "klnmf/objectives.hpp"
#include "klnmf/reconstruct.hpp"
#include "klnmf/types.hpp"

namespace klnmf {

template <typename Scalar>
struct ViStepOutcome {
  Matrix<Scalar> W;
  VariationalState<Scalar> state;
  Scalar elbo;
  int recon_evals;
};

namespace detail {

template <typename Scalar>
void require_vi_input(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Priors<Scalar>& priors,
                      const VariationalState<Scalar>& state) {
  require_shapes(X, W, state.beta.rows(), state.beta.cols());
  if (priors.n_topics() != W.cols()) {
    throw DataError("alpha has " + std::to_string(priors.n_topics()) + " entries, K=" + std::to_string(W.cols()));
  }
  require_nonnegative(W, "W");
  require_unit_columns(W, "W");
}

/// Shared body of the Dirichlet-Poisson and Gamma-Poisson iterations, given
/// h~ for the current state: one reconstruction W H~, then
///   w'_vk ∝ w_vk sum_d x_vd h~_kd / (W H~)_vd,
///   beta'_kd = alpha_k + h~_kd sum_v x_vd w_vk / (W H~)_vd.
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> vi_update(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W,
                                                    const Matrix<Scalar>& htilde, const Priors<Scalar>& priors,
                                                    const StepOptions& opts) {
  auto num = joint_numerators(X, W, htilde, opts.threads);
  apply_floor(num.W, opts.epsilon_floor);
  normalize_topics(num.W);
  num.H.colwise() += priors.alpha;
  return {std::move(num.W), std::move(num.H)};
}

}  // namespace detail

/// b_kd = 1 + a_k, broadcast over documents.
template <typename Scalar>
Matrix<Scalar> stationary_rates(const Priors<Scalar>& priors, Index n_docs) {
  if (!priors.has_rate()) throw DataError("Gamma-Poisson model needs rate_a");
  return (priors.rate_a.array() + Scalar(1)).matrix().replicate(1, n_docs);
}

/// One variational EM iteration of LDA in its Dirichlet-Poisson form; the
/// responsibilities are implied by (W, h~) and never materialized.
template <typename Scalar>
ViStepOutcome<Scalar> dp_vi_step(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Priors<Scalar>& priors,
                                 const VariationalState<Scalar>& state, const StepOptions& opts = {}) {
  detail::require_vi_input(X, W, priors, state);
  const Matrix<Scalar> htilde = expected_log_h_dirichlet(state.beta);
  auto [W_next, beta_next] = detail::vi_update(X, W, htilde, priors, opts);
  VariationalState<Scalar> next(std::move(beta_next));
  const Scalar elbo = lda_elbo(X, W_next, priors, next);
  return {std::move(W_next), std::move(next), elbo, 1};
}

/// One variational EM iteration of the Gamma-Poisson model. The variational
/// rates are pinned at their stationary value b = 1 + a; the returned state
/// carries them.
template <typename Scalar>
ViStepOutcome<Scalar> gap_vi_step(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W, const Priors<Scalar>& priors,
                                  const VariationalState<Scalar>& state, const StepOptions& opts = {}) {
  detail::require_vi_input(X, W, priors, state);
  Matrix<Scalar> rates = stationary_rates(priors, X.n_docs());
  const Matrix<Scalar> htilde = expected_log_h_gamma(state.beta, rates);
  auto [W_next, beta_next] = detail::vi_update(X, W, htilde, priors, opts);
  VariationalState<Scalar> next(std::move(beta_next), std::move(rates));
  const Scalar elbo = gap_elbo(X, W_next, priors, next);
  return {std::move(W_next), std::move(next), elbo, 1};
}

template <typename Scalar>
ViStepOutcome<Scalar> vi_step(Method method, const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W,
                              const Priors<Scalar>& priors, const VariationalState<Scalar>& state,
                              const StepOptions& opts = {}) {
  switch (method) {
    case Method::Lda: return dp_vi_step(X, W, priors, state, opts);
    case Method::Gap: return gap_vi_step(X, W, priors, state, opts);
    default: throw UsageError("method '" + std::string(to_string(method)) + "' is not a variational method");
  }
}

template <typename Scalar>
Scalar vi_objective(Method method, const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W,
                    const Priors<Scalar>& priors, const VariationalState<Scalar>& state) {
  return method == Method::Gap ? gap_elbo(X, W, priors, state) : lda_elbo(X, W, priors, state);
}

template <typename Scalar>
struct ViFitResult {
  Matrix<Scalar> W;
  VariationalState<Scalar> state;
  FitTrace trace;
};

/// Variational EM driver for Method::Lda and Method::Gap. The ELBO is
/// evaluated after every step; a decrease beyond kMonotoneSlack (relative) is
/// reported as NoProgressError. Stopping rule as in fit().
template <typename Scalar>
ViFitResult<Scalar> fit_vi(const TermDocMatrix<Scalar>& X, const FitConfig& config, const Priors<Scalar>& priors,
                           const Matrix<Scalar>& W0, const Matrix<Scalar>& beta0) {
  config.validate();
  if (!is_variational(config.method)) throw UsageError("fit_vi() drives the variational methods lda and gap");
  std::optional<Matrix<Scalar>> rates;
  if (config.method == Method::Gap) rates = stationary_rates(priors, X.n_docs());
  ViFitResult<Scalar> result{W0, VariationalState<Scalar>(beta0, std::move(rates)), {}};
  detail::require_vi_input(X, result.W, priors, result.state);
  const StepOptions opts{config.epsilon_floor, config.threads};

  Scalar previous = vi_objective(config.method, X, result.W, priors, result.state);
  result.trace.initial_objective = static_cast<double>(previous);
  for (int iter = 0; iter < config.max_iters; ++iter) {
    const auto start = std::chrono::steady_clock::now();
    ViStepOutcome<Scalar> step = vi_step(config.method, X, result.W, priors, result.state, opts);
    const double elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.trace.objective.push_back(static_cast<double>(step.elbo));
    result.trace.recon_evals.push_back(step.recon_evals);
    result.trace.millis.push_back(elapsed);

    const Scalar scale = std::max(Scalar(1), std::abs(previous));
    if (step.elbo < previous - Scalar(kMonotoneSlack) * scale) {
      throw NoProgressError("ELBO decreased at iteration " + std::to_string(iter + 1) + ": " +
                            std::to_string(static_cast<double>(previous)) + " -> " +
                            std::to_string(static_cast<double>(step.elbo)));
    }
    result.W = std::move(step.W);
    result.state = std::move(step.state);
    const Scalar change = std::abs(step.elbo - previous) / scale;
    previous = step.elbo;
    if (change < Scalar(config.rel_tolerance)) {
      result.trace.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace klnmf
