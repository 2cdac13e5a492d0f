#include <array>
#include <cmath>
#include <limits>

#include "helpers.hpp"

using namespace klnmf;
using namespace klnmf::testing;

namespace {

Corpus dense(std::initializer_list<std::initializer_list<double>> rows) {
  Mat M(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (double x : row) M(i, j++) = x;
    ++i;
  }
  return Corpus::from_dense(M);
}

/// Every count vector of length V summing to N.
std::vector<Vec> compositions(Index V, int N) {
  std::vector<Vec> out;
  Vec x = Vec(Vec::Zero(V));
  auto rec = [&](auto&& self, Index v, int left) -> void {
    if (v == V - 1) {
      x(v) = left;
      out.push_back(x);
      return;
    }
    for (int c = 0; c <= left; ++c) {
      x(v) = c;
      self(self, v + 1, left - c);
    }
  };
  rec(rec, 0, N);
  return out;
}

}  // namespace

TEST_SUITE("objectives") {
  TEST_CASE("kl divergence examples") {
    Mat W(3, 2), H(2, 2);
    W << 1, 2, 3, 4, 0.5, 0.25;
    H << 1, 2, 4, 0.5;
    CHECK(std::abs(kl_divergence(Corpus::from_dense(W * H), W, H)) <= 1e-12);

    const Corpus I = dense({{1, 0}, {0, 1}});
    const Mat half = Mat(Mat::Constant(2, 1, 0.5));
    const Mat ones = Mat(Mat::Ones(1, 2));
    CHECK(std::abs(kl_divergence(I, half, ones) - 1.3862943611198906188) <= 1e-15);

    const Corpus two = dense({{2}});
    CHECK(std::abs(kl_divergence(two, Mat(Mat::Ones(1, 1)), Mat(Mat::Ones(1, 1))) - 0.38629436111989061883) <= 1e-15);
  }

  TEST_CASE("kl divergence reports infinite divergence with its location") {
    const Corpus X = dense({{1, 0}, {0, 1}});
    Mat W(2, 1), H(1, 2);
    W << 1, 0;
    H << 1, 1;
    CHECK_THROWS_WITH_AS(kl_divergence(X, W, H), "infinite divergence at (v=1, d=1)", InfiniteDivergenceError);
  }

  TEST_CASE("plsa log-likelihood examples") {
    const Corpus zeros(2, 2, {});
    CHECK(plsa_log_likelihood(zeros, Mat(Mat::Constant(2, 1, 0.5)), Mat(Mat::Ones(1, 2))) == 0.0);
    const Corpus I = dense({{1, 0}, {0, 1}});
    CHECK(std::abs(plsa_log_likelihood(I, Mat(Mat::Constant(2, 1, 0.5)), Mat(Mat::Ones(1, 2))) + 1.3862943611198906188) <=
          1e-15);
  }

  TEST_CASE("property: kl + plsa log-likelihood is constant on the both-simplex set") {
    const Corpus X = random_corpus(21);
    // sum (WH) = D on this set.
    const double constant = data_entropy_term(X) + static_cast<double>(X.n_docs());
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Mat W = random_simplex_columns(X.n_terms(), 5, seed);
      const Mat H = random_simplex_columns(5, X.n_docs(), seed + 50);
      const double sum = kl_divergence(X, W, H) + plsa_log_likelihood(X, W, H);
      CHECK(std::abs(sum - constant) <= 1e-10 * std::abs(constant));
    }
  }

  TEST_CASE("lda elbo, one topic, independent scalar oracle") {
    const Corpus X = dense({{1, 2}, {3, 4}});
    Mat w(2, 1);
    w << 0.4, 0.6;
    Mat beta(1, 2);
    beta << 5, 7;
    const double elbo = lda_elbo(X, w, Priors<double>(Vec::Ones(1)), VariationalState<double>(beta));
    CHECK(std::abs(elbo - -6.324651561984399978) <= 1e-10);
  }

  TEST_CASE("lda elbo, two topics, matches an explicit-responsibility evaluation") {
    const Corpus X = dense({{2, 0}, {1, 3}, {0, 4}});
    Mat W(3, 2);
    W << 0.5, 0.1, 0.3, 0.2, 0.2, 0.7;
    Vec alpha(2);
    alpha << 0.5, 1.5;
    Mat beta(2, 2);
    beta << 2.0, 3.5, 1.25, 6.0;
    const double elbo = lda_elbo(X, W, Priors<double>(alpha), VariationalState<double>(beta));
    CHECK(std::abs(elbo - -12.755117388578752602) <= 1e-10);
  }

  TEST_CASE("lda elbo with beta equal to alpha keeps only the data term") {
    const Corpus X = random_corpus(2, 8, 4, 3);
    const Mat W = random_simplex_columns(8, 3, 4);
    const Vec alpha = random_positive(3, 1, 5, 0.2, 3.0);
    const Mat beta = alpha.replicate(1, 4);
    const double elbo = lda_elbo(X, W, Priors<double>(alpha), VariationalState<double>(beta));
    const double data = plsa_log_likelihood(X, W, expected_log_h_dirichlet(beta));
    CHECK(std::abs(elbo - data) <= 1e-12 * std::abs(data));
  }

  TEST_CASE("lda elbo preconditions") {
    const Corpus X = dense({{1, 0}, {0, 1}});
    Mat W(2, 1);
    W << 1, 0;
    CHECK_THROWS_WITH_AS(lda_elbo(X, W, Priors<double>(Vec::Ones(1)), VariationalState<double>(Mat::Ones(1, 2))),
                         doctest::Contains("unrepresentable term"), InfiniteDivergenceError);
    CHECK_THROWS_AS(lda_elbo(X, Mat(W * 2.0), Priors<double>(Vec::Ones(1)), VariationalState<double>(Mat::Ones(1, 2))),
                    DataError);
  }

  TEST_CASE("gamma-poisson elbo, one topic, independent scalar oracle") {
    Mat x(2, 1);
    x << 1, 3;
    const Corpus X = Corpus::from_dense(x);
    Mat w(2, 1);
    w << 0.25, 0.75;
    const Priors<double> priors(Vec::Constant(1, 2.0), Vec(Vec::Constant(1, 0.5)));
    const VariationalState<double> state(Mat::Constant(1, 1, 3.0), Mat(Mat::Constant(1, 1, 1.5)));
    CHECK(std::abs(gap_elbo(X, w, priors, state) - -2.6069254023887635843) <= 1e-10);
  }

  TEST_CASE("gamma-poisson elbo at the prior keeps the data and normalizer terms") {
    const Corpus X = random_corpus(6, 8, 4, 3);
    const Mat W = random_simplex_columns(8, 3, 7);
    const Vec alpha = random_positive(3, 1, 8, 0.2, 3.0);
    const Vec a = random_positive(3, 1, 9, 0.2, 3.0);
    const Mat beta = alpha.replicate(1, 4);
    const Mat b = a.replicate(1, 4);
    const double elbo = gap_elbo(X, W, Priors<double>(alpha, a), VariationalState<double>(beta, b));
    const double expected = plsa_log_likelihood(X, W, expected_log_h_gamma(beta, b)) - 4 * (alpha.array() / a.array()).sum();
    CHECK(std::abs(elbo - expected) <= 1e-12 * std::abs(expected));
    CHECK_THROWS_AS(gap_elbo(X, W, Priors<double>(alpha), VariationalState<double>(beta, b)), DataError);
    CHECK_THROWS_AS(gap_elbo(X, W, Priors<double>(alpha, a), VariationalState<double>(beta)), DataError);
  }

  TEST_CASE("joint auxiliary function: tightness, hand value, majorization") {
    const Corpus one = dense({{2}});
    CHECK(std::abs(joint_aux(one, Mat(Mat::Ones(1, 1)), Mat(Mat::Constant(1, 1, 3.0)), Mat(Mat::Ones(1, 1)), Mat(Mat::Ones(1, 1))) -
                   0.18906978378367123604) <= 1e-15);

    const Corpus X = random_corpus(13);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const Mat Wa = random_positive(X.n_terms(), 5, seed, 0.01, 1.0);
      const Mat Ha = random_positive(5, X.n_docs(), seed + 1000, 0.1, 20.0);
      const double f_anchor = kl_divergence(X, Wa, Ha);
      CHECK(std::abs(joint_aux(X, Wa, Ha, Wa, Ha) - f_anchor) <= 1e-12 * std::max(1.0, f_anchor));

      const Mat W = random_positive(X.n_terms(), 5, seed + 2000, 0.01, 1.0);
      const Mat H = random_positive(5, X.n_docs(), seed + 3000, 0.1, 20.0);
      const double f = kl_divergence(X, W, H);
      CHECK(joint_aux(X, W, H, Wa, Ha) >= f - 1e-10 * std::max(1.0, f));
    }
    Mat zero = random_positive(X.n_terms(), 5, 1);
    zero(X.slot_term(0), 0) = 0;
    const Mat H = random_positive(5, X.n_docs(), 2);
    CHECK(joint_aux(X, zero, H, random_positive(X.n_terms(), 5, 3), H) == std::numeric_limits<double>::infinity());
  }

  TEST_CASE("poisson marginal log-likelihood") {
    Mat W(2, 1);
    W << 1, 0;
    const Vec h = Vec(Vec::Ones(1));
    CHECK(std::abs(poisson_marginal_loglik(Vec((Vec(2) << 2, 0).finished()), W, h) - -1.6931471805599453094) <=
          1e-13);
    const Mat W2 = random_positive(3, 2, 4);
    const Vec h2 = random_positive(2, 1, 5);
    CHECK(std::abs(poisson_marginal_loglik(Vec(Vec::Zero(3)), W2, h2) + (W2 * h2).sum()) <= 1e-15);
    CHECK_THROWS_AS(poisson_marginal_loglik(Vec((Vec(2) << 0, 1).finished()), W, h), InfiniteDivergenceError);
  }

  TEST_CASE("property: normalized poisson marginal sums to the poisson(1) mass of N") {
    const Mat W = random_simplex_columns(3, 2, 11);
    const Mat h = random_simplex_columns(2, 1, 12);
    for (int N = 0; N <= 4; ++N) {
      double mass = 0;
      for (const Vec& x : compositions(3, N)) mass += std::exp(poisson_marginal_loglik(x, W, Vec(h.col(0))));
      CHECK(std::abs(mass - std::exp(-1.0 - std::lgamma(N + 1.0))) <= 1e-14);
    }
  }

  TEST_CASE("multinomial marginal log-likelihood") {
    Mat W(2, 1);
    W << 1, 0;
    CHECK(multinomial_marginal_loglik(Vec((Vec(2) << 2, 0).finished()), W, Vec(Vec::Ones(1)), 2.0) == 0.0);
    const Mat half = Mat(Mat::Constant(2, 1, 0.5));
    CHECK(std::abs(multinomial_marginal_loglik(Vec((Vec(2) << 1, 1).finished()), half, Vec(Vec::Ones(1)), 2.0) -
                   std::log(0.5)) <= 1e-13);
    CHECK_THROWS_WITH_AS(multinomial_marginal_loglik(Vec((Vec(2) << 1, 1).finished()), half, Vec(Vec::Ones(1)), 3.0),
                         doctest::Contains("count mismatch"), DataError);
  }

  TEST_CASE("property: poisson and multinomial marginals differ by log(e^-1 / N!)") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Mat W = random_simplex_columns(3, 2, seed);
      const Vec h = random_simplex_columns(2, 1, seed + 77).col(0);
      for (int N = 0; N <= 4; ++N) {
        const double expected = -1.0 - std::lgamma(N + 1.0);
        for (const Vec& x : compositions(3, N)) {
          const double diff = poisson_marginal_loglik(x, W, h) - multinomial_marginal_loglik(x, W, h, double(N));
          CHECK(std::abs(diff - expected) <= 1e-12);
        }
      }
    }
  }
}
