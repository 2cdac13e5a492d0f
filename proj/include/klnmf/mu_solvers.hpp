#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>

#include "klnmf/objectives.hpp"
#include "klnmf/reconstruct.hpp"
#include "klnmf/types.hpp"

namespace klnmf {

struct StepOptions {
  /// Entries below epsilon_floor * (column max) are raised to that level
  /// after every multiplicative update, before any normalization.
  double epsilon_floor = 1e-12;
  int threads = 1;
};

/// Result of one multiplicative update. `recon_evals` counts the full passes
/// over the nonzeros of X that evaluate (WH)_vd for the update itself; the
/// objective reported here is monitoring and is not counted.
template <typename Scalar>
struct StepOutcome {
  Factorization<Scalar> model;
  Scalar objective;
  int recon_evals;
};

namespace detail {

template <typename Scalar>
void require_step_input(const TermDocMatrix<Scalar>& X, const Factorization<Scalar>& f, ConstraintMode expected,
                        const char* stepper) {
  if (f.mode() != expected) {
    throw UsageError(std::string(stepper) + " needs a " + std::string(to_string(expected)) +
                     " factorization, got " + std::string(to_string(f.mode())));
  }
  require_shapes(X, f.W(), f.H().rows(), f.H().cols());
}

template <typename Scalar>
void normalize_documents(Matrix<Scalar>& H) {
  for (Index d = 0; d < H.cols(); ++d) {
    const Scalar s = H.col(d).sum();
    if (!(s > 0) || !std::isfinite(static_cast<double>(s))) {
      throw NumericalError("document " + std::to_string(d) + " has no topic mass (empty document?)");
    }
    H.col(d) /= s;
  }
}

/// Both multiplicative numerators from a single reconstruction anchored at (W, H):
/// w_vk sum_d x_vd h_kd / (WH)_vd and h_kd sum_v x_vd w_vk / (WH)_vd.
template <typename Scalar>
struct JointNumerators {
  Matrix<Scalar> W;
  Matrix<Scalar> H;
};

template <typename Scalar>
JointNumerators<Scalar> joint_numerators(const TermDocMatrix<Scalar>& X, const Matrix<Scalar>& W,
                                         const Matrix<Scalar>& H, int threads) {
  const Vector<Scalar> ratio = ratio_pass(X, W, H, threads);
  JointNumerators<Scalar> out;
  out.W = W.cwiseProduct(word_numerators(X, ratio, H, threads));
  out.H = H.cwiseProduct(topic_numerators(X, ratio, W, threads));
  return out;
}

}  // namespace detail

/// Alternating multiplicative updates (Lee-Seung). W is updated against the
/// reconstruction at (W, H), then H against the recomputed reconstruction at
/// (W_new, H): two reconstructions per step.
template <typename Scalar>
StepOutcome<Scalar> mu_step_alternating(const TermDocMatrix<Scalar>& X, const Factorization<Scalar>& f,
                                        const StepOptions& opts = {}) {
  detail::require_step_input(X, f, ConstraintMode::Unconstrained, "mu_step_alternating");
  const Matrix<Scalar>& W = f.W();
  const Matrix<Scalar>& H = f.H();

  const Vector<Scalar> topic_mass = H.rowwise().sum();
  for (Index k = 0; k < topic_mass.size(); ++k)
    if (!(topic_mass(k) > 0)) throw DeadTopicError(k);
  const Vector<Scalar> ratio = detail::ratio_pass(X, W, H, opts.threads);
  Matrix<Scalar> W_next = W.cwiseProduct(detail::word_numerators(X, ratio, H, opts.threads));
  W_next.array().rowwise() /= topic_mass.transpose().array();
  detail::apply_floor(W_next, opts.epsilon_floor);

  const Vector<Scalar> word_mass = column_sums(W_next);
  for (Index k = 0; k < word_mass.size(); ++k)
    if (!(word_mass(k) > 0)) throw DeadTopicError(k);
  const Vector<Scalar> ratio_next = detail::ratio_pass(X, W_next, H, opts.threads);
  Matrix<Scalar> H_next = H.cwiseProduct(detail::topic_numerators(X, ratio_next, W_next, opts.threads));
  H_next.array().colwise() /= word_mass.array();
  detail::apply_floor(H_next, opts.epsilon_floor);

  const Scalar objective = kl_divergence(X, W_next, H_next);
  return {Factorization<Scalar>(std::move(W_next), std::move(H_next), ConstraintMode::Unconstrained), objective, 2};
}

/// Joint updates with column-normalized W: both factors are updated from the
/// same reconstruction, W renormalized per column, H taken as the raw
/// numerator (its denominator sum_v w_vk is 1).
template <typename Scalar>
StepOutcome<Scalar> mu_step_joint_wnorm(const TermDocMatrix<Scalar>& X, const Factorization<Scalar>& f,
                                        const StepOptions& opts = {}) {
  detail::require_step_input(X, f, ConstraintMode::WSimplex, "mu_step_joint_wnorm");
  auto num = detail::joint_numerators(X, f.W(), f.H(), opts.threads);
  detail::apply_floor(num.W, opts.epsilon_floor);
  detail::normalize_topics(num.W);
  detail::apply_floor(num.H, opts.epsilon_floor);
  const Scalar objective = kl_divergence(X, num.W, num.H);
  return {Factorization<Scalar>(std::move(num.W), std::move(num.H), ConstraintMode::WSimplex), objective, 1};
}

/// Joint updates with both W and H column-normalized. This is the PLSA EM
/// iteration written without the responsibilities.
template <typename Scalar>
StepOutcome<Scalar> mu_step_joint_bothnorm(const TermDocMatrix<Scalar>& X, const Factorization<Scalar>& f,
                                           const StepOptions& opts = {}) {
  detail::require_step_input(X, f, ConstraintMode::BothSimplex, "mu_step_joint_bothnorm");
  auto num = detail::joint_numerators(X, f.W(), f.H(), opts.threads);
  detail::apply_floor(num.W, opts.epsilon_floor);
  detail::normalize_topics(num.W);
  detail::apply_floor(num.H, opts.epsilon_floor);
  detail::normalize_documents(num.H);
  const Scalar objective = kl_divergence(X, num.W, num.H);
  return {Factorization<Scalar>(std::move(num.W), std::move(num.H), ConstraintMode::BothSimplex), objective, 1};
}

/// Joint updates for KL + lambda ||H||_1 with column-normalized W. Identical
/// to mu_step_joint_wnorm except that H is scaled by 1 / (1 + lambda). The
/// reported objective includes the penalty.
template <typename Scalar>
StepOutcome<Scalar> mu_step_sparse(const TermDocMatrix<Scalar>& X, const Factorization<Scalar>& f, Scalar lambda,
                                   const StepOptions& opts = {}) {
  detail::require_step_input(X, f, ConstraintMode::WSimplex, "mu_step_sparse");
  if (!(lambda >= 0)) throw UsageError("lambda must be >= 0");
  auto num = detail::joint_numerators(X, f.W(), f.H(), opts.threads);
  detail::apply_floor(num.W, opts.epsilon_floor);
  detail::normalize_topics(num.W);
  num.H /= Scalar(1) + lambda;
  detail::apply_floor(num.H, opts.epsilon_floor);
  const Scalar objective = penalized_kl(X, num.W, num.H, lambda);
  return {Factorization<Scalar>(std::move(num.W), std::move(num.H), ConstraintMode::WSimplex), objective, 1};
}

/// Dispatches to the stepper of a multiplicative method.
template <typename Scalar>
StepOutcome<Scalar> mu_step(Method method, const TermDocMatrix<Scalar>& X, const Factorization<Scalar>& f,
                            Scalar lambda, const StepOptions& opts = {}) {
  switch (method) {
    case Method::Mu: return mu_step_alternating(X, f, opts);
    case Method::MuJoint: return mu_step_joint_wnorm(X, f, opts);
    case Method::Plsa: return mu_step_joint_bothnorm(X, f, opts);
    case Method::Sparse: return mu_step_sparse(X, f, lambda, opts);
    default: throw UsageError("method '" + std::string(to_string(method)) + "' is not a multiplicative method");
  }
}

/// Objective minimized by a multiplicative method.
template <typename Scalar>
Scalar mu_objective(Method method, const TermDocMatrix<Scalar>& X, const Factorization<Scalar>& f, Scalar lambda) {
  return method == Method::Sparse ? penalized_kl(X, f.W(), f.H(), lambda) : kl_divergence(X, f.W(), f.H());
}

/// Relative slack allowed before an objective move against the guaranteed
/// direction is reported as NoProgressError.
inline constexpr double kMonotoneSlack = 1e-9;

template <typename Scalar>
struct FitResult {
  Factorization<Scalar> model;
  FitTrace trace;
};

/// Runs the stepper selected by config.method from `init` until the relative
/// objective change |f_n - f_{n-1}| / max(1, |f_{n-1}|) drops below
/// config.rel_tolerance or config.max_iters steps were taken.
template <typename Scalar>
FitResult<Scalar> fit(const TermDocMatrix<Scalar>& X, const FitConfig& config, const Factorization<Scalar>& init) {
  config.validate();
  if (is_variational(config.method)) throw UsageError("fit() drives multiplicative methods; use fit_vi()");
  const ConstraintMode mode = constraint_mode_for(config.method);
  if (init.mode() != mode) {
    throw UsageError("method " + std::string(to_string(config.method)) + " needs a " +
                     std::string(to_string(mode)) + " initialization");
  }
  const Scalar lambda = Scalar(config.lambda_sparsity);
  const StepOptions opts{config.epsilon_floor, config.threads};

  FitResult<Scalar> result{init, {}};
  Scalar previous = mu_objective(config.method, X, init, lambda);
  result.trace.initial_objective = static_cast<double>(previous);
  for (int iter = 0; iter < config.max_iters; ++iter) {
    const auto start = std::chrono::steady_clock::now();
    StepOutcome<Scalar> step = mu_step(config.method, X, result.model, lambda, opts);
    const double elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.trace.objective.push_back(static_cast<double>(step.objective));
    result.trace.recon_evals.push_back(step.recon_evals);
    result.trace.millis.push_back(elapsed);

    const Scalar scale = std::max(Scalar(1), std::abs(previous));
    if (step.objective > previous + Scalar(kMonotoneSlack) * scale) {
      throw NoProgressError("objective increased at iteration " + std::to_string(iter + 1) + ": " +
                            std::to_string(static_cast<double>(previous)) + " -> " +
                            std::to_string(static_cast<double>(step.objective)));
    }
    result.model = std::move(step.model);
    const Scalar change = std::abs(step.objective - previous) / scale;
    previous = step.objective;
    if (change < Scalar(config.rel_tolerance)) {
      result.trace.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace klnmf
