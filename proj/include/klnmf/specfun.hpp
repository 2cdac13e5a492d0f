#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "klnmf/error.hpp"

namespace klnmf {

// Digamma and log-gamma on (0, inf). Both shift the argument upward with the
// recurrence and finish with the asymptotic (Stirling-type) series. Error is
// below 1e-12 * max(1, |f(x)|) on [1e-6, 1e6]; near the pole at 0 the value
// itself is ~1/x, so the absolute error there is bounded by double rounding.

/// psi(x) = d/dx log Gamma(x).
template <typename Scalar>
Scalar digamma(Scalar x) {
  if (!(x > 0) || !std::isfinite(static_cast<double>(x))) {
    throw DataError("digamma: argument must be positive and finite, got " + std::to_string(static_cast<double>(x)));
  }
  // psi(x) = psi(x + n) - sum_{i<n} 1/(x + i)
  Scalar shift = 0;
  while (x < Scalar(6)) {
    shift -= Scalar(1) / x;
    x += Scalar(1);
  }
  // log x - 1/(2x) - sum_n B_2n / (2n x^2n)
  const Scalar inv = Scalar(1) / x;
  const Scalar inv2 = inv * inv;
  const Scalar series =
      inv2 * (Scalar(1) / 12 -
              inv2 * (Scalar(1) / 120 -
                      inv2 * (Scalar(1) / 252 -
                              inv2 * (Scalar(1) / 240 -
                                      inv2 * (Scalar(1) / 132 -
                                              inv2 * (Scalar(691) / 32760 -
                                                       inv2 * (Scalar(1) / 12 - inv2 * Scalar(3617) / 8160)))))));
  return shift + std::log(x) - Scalar(0.5) * inv - series;
}

/// log Gamma(x) for x > 0.
template <typename Scalar>
Scalar log_gamma(Scalar x) {
  if (!(x > 0) || !std::isfinite(static_cast<double>(x))) {
    throw DataError("log_gamma: argument must be positive and finite, got " + std::to_string(static_cast<double>(x)));
  }
  if (x == Scalar(1) || x == Scalar(2)) return Scalar(0);
  // log Gamma(x) = log Gamma(x + n) - log(x (x+1) ... (x+n-1))
  Scalar product = 1;
  while (x < Scalar(12)) {
    product *= x;
    x += Scalar(1);
  }
  const Scalar inv = Scalar(1) / x;
  const Scalar inv2 = inv * inv;
  // sum_n B_2n / (2n (2n-1) x^(2n-1))
  const Scalar series =
      inv * (Scalar(1) / 12 -
             inv2 * (Scalar(1) / 360 -
                     inv2 * (Scalar(1) / 1260 -
                             inv2 * (Scalar(1) / 1680 -
                                     inv2 * (Scalar(1) / 1188 -
                                             inv2 * (Scalar(691) / 360360 - inv2 * (Scalar(1) / 156)))))));
  const Scalar half_log_two_pi = Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
  return (x - Scalar(0.5)) * std::log(x) - x + half_log_two_pi + series - std::log(product);
}

}  // namespace klnmf
