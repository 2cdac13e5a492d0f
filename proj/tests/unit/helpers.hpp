#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "klnmf/klnmf.hpp"

namespace klnmf::testing {

using Mat = Matrix<double>;
using Vec = Vector<double>;
using Corpus = TermDocMatrix<double>;

/// X ~ Poisson(W H) with Dirichlet(1) topics and Gamma(1, scale) weights;
/// empty documents get a single count so every column has mass.
inline Corpus random_corpus(std::uint64_t seed, Index V = 30, Index D = 20, Index K = 5, double scale = 20.0) {
  std::mt19937_64 rng(seed * 7919 + 17);
  std::gamma_distribution<double> unit(1.0, 1.0);
  std::gamma_distribution<double> weight(1.0, scale);
  Mat W(V, K), H(K, D);
  for (Index k = 0; k < K; ++k) {
    for (Index v = 0; v < V; ++v) W(v, k) = unit(rng);
    W.col(k) /= W.col(k).sum();
  }
  for (Index d = 0; d < D; ++d)
    for (Index k = 0; k < K; ++k) H(k, d) = weight(rng);
  const Mat rate = W * H;
  Mat X(V, D);
  for (Index d = 0; d < D; ++d) {
    for (Index v = 0; v < V; ++v) X(v, d) = std::poisson_distribution<long>(rate(v, d))(rng);
    if (X.col(d).sum() == 0) X(static_cast<Index>(rng() % static_cast<std::uint64_t>(V)), d) = 1;
  }
  return Corpus::from_dense(X);
}

inline Mat random_positive(Index rows, Index cols, std::uint64_t seed, double lo = 0.1, double hi = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Mat M(rows, cols);
  for (Index i = 0; i < M.size(); ++i) M.data()[i] = u(rng);
  return M;
}

inline Mat random_simplex_columns(Index rows, Index cols, std::uint64_t seed) {
  return normalize_columns(random_positive(rows, cols, seed)).matrix;
}

inline double max_abs_diff(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// max |a - b| / max(1, |b|)
inline double max_rel_diff(const Mat& a, const Mat& b) {
  return ((a - b).array().abs() / b.array().abs().max(1.0)).maxCoeff();
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::path(KLNMF_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace klnmf::testing
