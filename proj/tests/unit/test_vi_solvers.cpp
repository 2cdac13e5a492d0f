#include <cmath>

#include "helpers.hpp"

using namespace klnmf;
using namespace klnmf::testing;

namespace {

Corpus small_x() {
  Mat X(2, 2);
  X << 1, 2, 3, 4;
  return Corpus::from_dense(X);
}

}  // namespace

TEST_SUITE("vi-solvers") {
  TEST_CASE("one-topic steps: beta' = alpha + document total") {
    Mat W(2, 1);
    W << 0.5, 0.5;
    const Priors<double> lda(Vec::Constant(1, 0.5));
    const auto s = dp_vi_step(small_x(), W, lda, VariationalState<double>(Mat(Mat::Constant(1, 2, 3.0))));
    CHECK(std::abs(s.state.beta(0, 0) - 4.5) <= 1e-14);
    CHECK(std::abs(s.state.beta(0, 1) - 6.5) <= 1e-14);
    CHECK(std::abs(s.W(0, 0) - 0.3) <= 1e-15);
    CHECK(s.recon_evals == 1);

    const Priors<double> gap(Vec::Constant(1, 0.5), Vec::Constant(1, 2.0));
    const auto g = gap_vi_step(small_x(), W, gap, VariationalState<double>(Mat(Mat::Constant(1, 2, 3.0))));
    CHECK(std::abs(g.state.beta(0, 0) - 4.5) <= 1e-14);
    CHECK(std::abs(g.state.beta(0, 1) - 6.5) <= 1e-14);
    REQUIRE(g.state.b_rate);
    CHECK(*g.state.b_rate == Mat::Constant(1, 2, 3.0));
    CHECK(g.recon_evals == 1);
  }

  TEST_CASE("gamma-poisson rates are pinned at 1 + a") {
    Vec a(3);
    a << 0.5, 1.0, 4.0;
    const Priors<double> p(Vec::Ones(3), a);
    const Mat b = stationary_rates(p, 4);
    CHECK(b.rows() == 3);
    CHECK(b.cols() == 4);
    CHECK(b.col(3) == Vec((Vec(3) << 1.5, 2.0, 5.0).finished()));
    CHECK_THROWS_AS(stationary_rates(Priors<double>(Vec::Ones(3)), 4), DataError);
  }

  TEST_CASE("Dirichlet-Poisson step agrees with the explicit-responsibility LDA transcript") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Corpus X = random_corpus(seed + 70);
      const auto priors = Priors<double>(random_positive(5, 1, seed, 0.1, 2.0).col(0));
      Mat W = random_topics<double>(X.n_terms(), 5, seed);
      VariationalState<double> state(perturbed_beta(X, priors, seed));
      reference::LdaState<double> ref{W, state.beta};
      for (int n = 0; n < 30; ++n) {
        auto s = dp_vi_step(X, W, priors, state);
        W = std::move(s.W);
        state = std::move(s.state);
        ref = reference::lda_vi_step(X, ref.W, priors.alpha, ref.beta);
        CHECK(max_abs_diff(W, ref.W) <= 1e-12);
        CHECK(max_rel_diff(state.beta, ref.beta) <= 1e-12);
      }
    }
  }

  TEST_CASE("an all-zero matrix kills every topic") {
    const Corpus X(3, 2, {});
    const Mat W = random_simplex_columns(3, 2, 1);
    CHECK_THROWS_AS(dp_vi_step(X, W, Priors<double>(Vec::Ones(2)), VariationalState<double>(Mat(Mat::Ones(2, 2)))),
                    DeadTopicError);
  }

  TEST_CASE("property: beta column sums equal sum(alpha) + lambda_d after a step") {
    const Corpus X = random_corpus(3);
    const auto priors = Priors<double>(random_positive(5, 1, 3, 0.1, 2.0).col(0));
    const auto s = dp_vi_step(X, random_topics<double>(X.n_terms(), 5, 3), priors,
                              VariationalState<double>(perturbed_beta(X, priors, 4)));
    const Vec expected = (X.column_sums().array() + priors.alpha.sum()).matrix();
    CHECK(((column_sums(s.state.beta) - expected).array() / expected.array()).abs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("property: one step never lowers the bound") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Corpus X = random_corpus(seed + 900);
      const auto priors = Priors<double>::uniform(5, 0.3, 0.7);
      const Mat W = random_topics<double>(X.n_terms(), 5, seed);
      const VariationalState<double> lda(perturbed_beta(X, priors, seed));
      const auto s = dp_vi_step(X, W, priors, lda);
      const double before = lda_elbo(X, W, priors, lda);
      CHECK(s.elbo >= before - 1e-9 * std::abs(before));

      const VariationalState<double> gap(lda.beta, stationary_rates(priors, X.n_docs()));
      const auto g = gap_vi_step(X, W, priors, gap);
      const double gap_before = gap_elbo(X, W, priors, gap);
      CHECK(g.elbo >= gap_before - 1e-9 * std::abs(gap_before));
    }
  }

  TEST_CASE("gamma-poisson and Dirichlet-Poisson iterates coincide for uniform rates") {
    const Corpus X = random_corpus(12);
    const auto priors = Priors<double>::uniform(5, 0.4, 2.5);
    Mat W_lda = random_topics<double>(X.n_terms(), 5, 12);
    Mat W_gap = W_lda;
    VariationalState<double> lda(perturbed_beta(X, priors, 12));
    // Deliberately off-stationary initial rates: the step replaces them.
    VariationalState<double> gap(lda.beta, Mat(Mat::Constant(5, X.n_docs(), 9.0)));
    for (int n = 0; n < 30; ++n) {
      auto a = dp_vi_step(X, W_lda, priors, lda);
      auto b = gap_vi_step(X, W_gap, priors, gap);
      W_lda = std::move(a.W);
      W_gap = std::move(b.W);
      lda = std::move(a.state);
      gap = std::move(b.state);
      CHECK(max_abs_diff(W_gap, W_lda) <= 1e-12);
      CHECK(max_rel_diff(gap.beta, lda.beta) <= 1e-12);
    }
  }

  TEST_CASE("variational fit driver") {
    const Corpus X = random_corpus(30);
    const auto priors = Priors<double>::uniform(5, 0.5, 1.0);
    const Mat W0 = random_topics<double>(X.n_terms(), 5, 30);
    const Mat beta0 = default_beta(X, priors);
    FitConfig config;
    config.method = Method::Lda;
    config.max_iters = 1;
    const auto one = fit_vi(X, config, priors, W0, beta0);
    CHECK(one.trace.size() == 1);
    CHECK(one.trace.recon_evals[0] == 1);

    config.max_iters = 300;
    config.rel_tolerance = 1e-12;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Corpus Y = random_corpus(seed + 300);
      const Mat W = random_topics<double>(Y.n_terms(), 5, seed);
      const Mat beta = default_beta(Y, priors);
      config.method = Method::Lda;
      const auto lda = fit_vi(Y, config, priors, W, beta);
      double prev = lda.trace.initial_objective;
      for (double e : lda.trace.objective) {
        CHECK(e >= prev - 1e-9 * std::abs(prev));
        prev = e;
      }
      config.method = Method::Gap;
      const auto gap = fit_vi(Y, config, priors, W, beta);
      REQUIRE(gap.trace.size() >= 1);
      CHECK(max_abs_diff(gap.W, lda.W) <= 1e-10);
      CHECK(max_rel_diff(gap.state.beta, lda.state.beta) <= 1e-10);
      CHECK((gap.state.b_rate->array() - 2.0).abs().maxCoeff() == 0.0);
    }
    config.method = Method::MuJoint;
    CHECK_THROWS_AS(fit_vi(X, config, priors, W0, beta0), UsageError);
  }
}
