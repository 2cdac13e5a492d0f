#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "klnmf/error.hpp"

namespace klnmf {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Column sums of W and H must equal one within this absolute tolerance when
/// the corresponding simplex constraint is declared.
inline constexpr double kSimplexTolerance = 1e-12;

enum class ConstraintMode { Unconstrained = 0, WSimplex = 1, BothSimplex = 2 };

inline std::string_view to_string(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::Unconstrained: return "unconstrained";
    case ConstraintMode::WSimplex: return "w_simplex";
    case ConstraintMode::BothSimplex: return "both_simplex";
  }
  return "unknown";
}

/// Sparse non-negative V x D count matrix with cached per-document totals.
///
/// Storage is column-major compressed (one column per document). A row index
/// is kept alongside so that word-wise reductions can run over documents in a
/// fixed order without transposing the values.
template <typename Scalar>
class TermDocMatrix {
 public:
  using SparseType = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, Index>;

  struct Entry {
    Index term;
    Index doc;
    Scalar count;
  };

  TermDocMatrix(Index n_terms, Index n_docs, std::span<const Entry> entries)
      : matrix_(n_terms, n_docs) {
    if (n_terms <= 0 || n_docs <= 0) {
      throw DataError("term-document matrix needs positive dimensions, got " +
                      std::to_string(n_terms) + "x" + std::to_string(n_docs));
    }
    std::vector<Eigen::Triplet<Scalar, Index>> triplets;
    triplets.reserve(entries.size());
    for (const Entry& e : entries) {
      if (e.term < 0 || e.term >= n_terms || e.doc < 0 || e.doc >= n_docs) {
        throw DataError("entry index (" + std::to_string(e.term) + ", " + std::to_string(e.doc) +
                        ") out of range");
      }
      if (!std::isfinite(static_cast<double>(e.count)) || e.count < Scalar(0)) {
        throw DataError("negative or non-finite count at (" + std::to_string(e.term) + ", " +
                        std::to_string(e.doc) + ")");
      }
      if (e.count > Scalar(0)) triplets.emplace_back(e.term, e.doc, e.count);
    }
    std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
      return a.col() != b.col() ? a.col() < b.col() : a.row() < b.row();
    });
    for (std::size_t i = 1; i < triplets.size(); ++i) {
      if (triplets[i].row() == triplets[i - 1].row() && triplets[i].col() == triplets[i - 1].col()) {
        throw DataError("duplicate entry at (" + std::to_string(triplets[i].row()) + ", " +
                        std::to_string(triplets[i].col()) + ")");
      }
    }
    matrix_.setFromTriplets(triplets.begin(), triplets.end());
    matrix_.makeCompressed();
    build_row_index();
    column_sums_ = recompute_column_sums();
  }

  /// Zeros of `dense` are dropped; negative entries are rejected.
  static TermDocMatrix from_dense(const Matrix<Scalar>& dense) {
    std::vector<Entry> entries;
    for (Index d = 0; d < dense.cols(); ++d)
      for (Index v = 0; v < dense.rows(); ++v)
        if (dense(v, d) != Scalar(0)) entries.push_back({v, d, dense(v, d)});
    return TermDocMatrix(dense.rows(), dense.cols(), entries);
  }

  Index n_terms() const { return matrix_.rows(); }
  Index n_docs() const { return matrix_.cols(); }
  Index nnz() const { return matrix_.nonZeros(); }

  const SparseType& matrix() const { return matrix_; }

  /// lambda_d = sum_v x_vd.
  const Vector<Scalar>& column_sums() const { return column_sums_; }
  Scalar total() const { return column_sums_.sum(); }

  // Column-major value storage: document d owns slots [doc_begin(d), doc_begin(d+1)).
  Index doc_begin(Index d) const { return matrix_.outerIndexPtr()[d]; }
  Index slot_term(Index slot) const { return matrix_.innerIndexPtr()[slot]; }
  Scalar slot_count(Index slot) const { return matrix_.valuePtr()[slot]; }

  // Row view: term v owns positions [term_begin(v), term_begin(v+1)) of the
  // row index, ordered by increasing document.
  Index term_begin(Index v) const { return row_ptr_[static_cast<std::size_t>(v)]; }
  Index row_doc(Index pos) const { return row_doc_[static_cast<std::size_t>(pos)]; }
  Index row_slot(Index pos) const { return row_slot_[static_cast<std::size_t>(pos)]; }

  Vector<Scalar> recompute_column_sums() const {
    Vector<Scalar> sums = Vector<Scalar>::Zero(n_docs());
    for (Index d = 0; d < n_docs(); ++d)
      for (Index s = doc_begin(d); s < doc_begin(d + 1); ++s) sums(d) += slot_count(s);
    return sums;
  }

  Matrix<Scalar> to_dense() const { return Matrix<Scalar>(matrix_); }

  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    out.reserve(static_cast<std::size_t>(nnz()));
    for (Index d = 0; d < n_docs(); ++d)
      for (Index s = doc_begin(d); s < doc_begin(d + 1); ++s) out.push_back({slot_term(s), d, slot_count(s)});
    return out;
  }

 private:
  void build_row_index() {
    const auto V = static_cast<std::size_t>(n_terms());
    row_ptr_.assign(V + 1, 0);
    for (Index s = 0; s < nnz(); ++s) ++row_ptr_[static_cast<std::size_t>(slot_term(s)) + 1];
    for (std::size_t v = 0; v < V; ++v) row_ptr_[v + 1] += row_ptr_[v];
    row_doc_.resize(static_cast<std::size_t>(nnz()));
    row_slot_.resize(static_cast<std::size_t>(nnz()));
    std::vector<Index> fill(row_ptr_.begin(), row_ptr_.end() - 1);
    for (Index d = 0; d < n_docs(); ++d) {
      for (Index s = doc_begin(d); s < doc_begin(d + 1); ++s) {
        const auto pos = static_cast<std::size_t>(fill[static_cast<std::size_t>(slot_term(s))]++);
        row_doc_[pos] = d;
        row_slot_[pos] = s;
      }
    }
  }

  SparseType matrix_;
  Vector<Scalar> column_sums_;
  std::vector<Index> row_ptr_;
  std::vector<Index> row_doc_;
  std::vector<Index> row_slot_;
};

namespace detail {

template <typename Derived>
void require_nonnegative(const Eigen::MatrixBase<Derived>& m, std::string_view name) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) {
      const auto x = m(i, j);
      if (!(x >= 0) || !std::isfinite(static_cast<double>(x))) {
        throw DataError(std::string(name) + " has a negative or non-finite entry at (" + std::to_string(i) +
                        ", " + std::to_string(j) + ")");
      }
    }
}

template <typename Derived>
void require_unit_columns(const Eigen::MatrixBase<Derived>& m, std::string_view name) {
  for (Index j = 0; j < m.cols(); ++j) {
    const double s = static_cast<double>(m.col(j).sum());
    if (std::abs(s - 1.0) > kSimplexTolerance) {
      throw DataError(std::string(name) + " column " + std::to_string(j) + " sums to " + std::to_string(s) +
                      ", expected 1");
    }
  }
}

template <typename Derived>
void require_positive(const Eigen::MatrixBase<Derived>& m, std::string_view name) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) {
      const auto x = m(i, j);
      if (!(x > 0) || !std::isfinite(static_cast<double>(x))) {
        throw DataError(std::string(name) + " must be strictly positive and finite at (" + std::to_string(i) +
                        ", " + std::to_string(j) + ")");
      }
    }
}

}  // namespace detail

/// A non-negative pair (W, H) together with the constraint set it lives in.
/// Invariants are checked on construction; the object is immutable afterwards.
template <typename Scalar>
class Factorization {
 public:
  Factorization(Matrix<Scalar> W, Matrix<Scalar> H, ConstraintMode mode)
      : W_(std::move(W)), H_(std::move(H)), mode_(mode) {
    if (W_.cols() != H_.rows()) {
      throw DataError("dimension mismatch: W has " + std::to_string(W_.cols()) + " columns, H has " +
                      std::to_string(H_.rows()) + " rows");
    }
    if (W_.cols() == 0) throw DataError("factorization needs at least one topic");
    detail::require_nonnegative(W_, "W");
    detail::require_nonnegative(H_, "H");
    if (mode_ != ConstraintMode::Unconstrained) detail::require_unit_columns(W_, "W");
    if (mode_ == ConstraintMode::BothSimplex) detail::require_unit_columns(H_, "H");
  }

  const Matrix<Scalar>& W() const { return W_; }
  const Matrix<Scalar>& H() const { return H_; }
  ConstraintMode mode() const { return mode_; }
  Index n_topics() const { return W_.cols(); }

 private:
  Matrix<Scalar> W_;
  Matrix<Scalar> H_;
  ConstraintMode mode_;
};

/// Dirichlet concentration `alpha` and, for the Gamma-Poisson model, Gamma
/// rates `rate_a`. An empty `rate_a` means "no Gamma prior".
template <typename Scalar>
struct Priors {
  Vector<Scalar> alpha;
  Vector<Scalar> rate_a;

  Priors(Vector<Scalar> alpha_, Vector<Scalar> rate_a_ = {}) : alpha(std::move(alpha_)), rate_a(std::move(rate_a_)) {
    if (alpha.size() == 0) throw DataError("alpha must have K >= 1 entries");
    detail::require_positive(alpha, "alpha");
    if (rate_a.size() != 0) {
      if (rate_a.size() != alpha.size()) {
        throw DataError("rate_a has " + std::to_string(rate_a.size()) + " entries, alpha has " +
                        std::to_string(alpha.size()));
      }
      detail::require_positive(rate_a, "rate_a");
    }
  }

  static Priors uniform(Index K, Scalar alpha, Scalar rate_a) {
    return Priors(Vector<Scalar>::Constant(K, alpha), Vector<Scalar>::Constant(K, rate_a));
  }

  Index n_topics() const { return alpha.size(); }
  bool has_rate() const { return rate_a.size() != 0; }
  bool uniform_rate() const { return has_rate() && (rate_a.array() == rate_a(0)).all(); }
};

/// Per-document variational parameters. The multinomial responsibilities are
/// never stored; they are a function of (W, beta) recomputed when needed.
template <typename Scalar>
struct VariationalState {
  Matrix<Scalar> beta;
  std::optional<Matrix<Scalar>> b_rate;

  explicit VariationalState(Matrix<Scalar> beta_, std::optional<Matrix<Scalar>> b_rate_ = std::nullopt)
      : beta(std::move(beta_)), b_rate(std::move(b_rate_)) {
    detail::require_positive(beta, "beta");
    if (b_rate) {
      if (b_rate->rows() != beta.rows() || b_rate->cols() != beta.cols()) {
        throw DataError("b_rate shape does not match beta");
      }
      detail::require_positive(*b_rate, "b_rate");
    }
  }
};

enum class Method { Mu, MuJoint, Plsa, Lda, Gap, Sparse };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Mu: return "mu";
    case Method::MuJoint: return "mu-joint";
    case Method::Plsa: return "plsa";
    case Method::Lda: return "lda";
    case Method::Gap: return "gap";
    case Method::Sparse: return "sparse";
  }
  return "unknown";
}

inline Method parse_method(std::string_view name) {
  for (Method m : {Method::Mu, Method::MuJoint, Method::Plsa, Method::Lda, Method::Gap, Method::Sparse})
    if (to_string(m) == name) return m;
  throw UsageError("unknown method '" + std::string(name) + "'");
}

inline bool is_variational(Method m) { return m == Method::Lda || m == Method::Gap; }

inline ConstraintMode constraint_mode_for(Method m) {
  switch (m) {
    case Method::Mu: return ConstraintMode::Unconstrained;
    case Method::Plsa: return ConstraintMode::BothSimplex;
    default: return ConstraintMode::WSimplex;
  }
}

struct FitConfig {
  Index n_topics = 5;
  int max_iters = 1000;
  double rel_tolerance = 1e-8;
  std::uint64_t seed = 0;
  double lambda_sparsity = 0.0;
  double epsilon_floor = 1e-12;
  Method method = Method::MuJoint;
  int threads = 1;

  void validate() const {
    if (n_topics < 1) throw UsageError("n_topics must be >= 1");
    if (max_iters < 1) throw UsageError("max_iters must be >= 1");
    if (!(rel_tolerance > 0)) throw UsageError("rel_tolerance must be > 0");
    if (!(lambda_sparsity >= 0)) throw UsageError("lambda_sparsity must be >= 0");
    if (!(epsilon_floor >= 0)) throw UsageError("epsilon_floor must be >= 0");
    if (threads < 1) throw UsageError("threads must be >= 1");
  }
};

/// One entry per solver iteration.
struct FitTrace {
  double initial_objective = 0;
  std::vector<double> objective;
  std::vector<int> recon_evals;
  std::vector<double> millis;
  bool converged = false;

  std::size_t size() const { return objective.size(); }
  long total_recon_evals() const {
    long n = 0;
    for (int c : recon_evals) n += c;
    return n;
  }
};

}  // namespace klnmf
