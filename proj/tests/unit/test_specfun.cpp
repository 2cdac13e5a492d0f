#include <array>
#include <cmath>

#include "helpers.hpp"

using namespace klnmf;
using namespace klnmf::testing;

namespace {

struct Reference {
  double x;
  double digamma;
  double log_gamma;
};

// mpmath at 40 digits, see tests/oracles/expected_values.py.
constexpr std::array<Reference, 14> kTable{{
    {1e-6, -1000000.5772140199687, 13.815509980749431669},
    {0.001, -1000.5755719318103005, 6.9071788853838536825},
    {0.1, -10.423754940411076795, 2.2527126517342059599},
    {0.5, -1.9635100260214234794, 0.57236494292470008707},
    {1.0, -0.57721566490153286061, 0.0},
    {1.5, 0.036489973978576520559, -0.12078223763524522235},
    {2.0, 0.42278433509846713939, 0.0},
    {3.5, 1.1031566406452431872, 1.2009736023470742248},
    {5.99, 1.7043027974138488783, 4.7704396377154038069},
    {6.0, 1.7061176684318004727, 4.7874917427820459942},
    {10.0, 2.2517525890667211076, 12.801827480081469611},
    {123.456, 4.8118293238289853873, 469.60554712992946873},
    {1000.0, 6.9072551956488120521, 5905.2204232091812118},
    {1e6, 13.815510057964190771, 12815504.56914761166},
}};

// Error budget 1e-12, relative once |f| > 1.
double budget(double f) { return 1e-12 * std::max(1.0, std::abs(f)); }

}  // namespace

TEST_SUITE("specfun") {
  TEST_CASE("digamma matches the high-precision table") {
    for (const auto& r : kTable) {
      CAPTURE(r.x);
      CHECK(std::abs(digamma(r.x) - r.digamma) <= budget(r.digamma));
    }
  }

  TEST_CASE("log_gamma matches the high-precision table") {
    for (const auto& r : kTable) {
      CAPTURE(r.x);
      CHECK(std::abs(log_gamma(r.x) - r.log_gamma) <= budget(r.log_gamma));
    }
    CHECK(log_gamma(1.0) == 0.0);
    CHECK(log_gamma(2.0) == 0.0);
    CHECK(std::abs(log_gamma(0.5) - 0.5 * std::log(M_PI)) <= 1e-13);
  }

  TEST_CASE("recurrence identities") {
    CHECK(std::abs((digamma(3.5) - digamma(2.5)) - 0.4) <= 1e-15);
    CHECK(std::abs((digamma(2.0) - digamma(1.0)) - 1.0) <= 1e-15);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.01, 50.0);
    for (int i = 0; i < 200; ++i) {
      const double x = u(rng);
      CAPTURE(x);
      CHECK(std::abs(log_gamma(x + 1) - log_gamma(x) - std::log(x)) <= 1e-12 * std::max(1.0, log_gamma(x + 1)));
      CHECK(std::abs(digamma(x + 1) - digamma(x) - 1 / x) <= 1e-12 * std::max(1.0, 1 / x));
    }
  }

  TEST_CASE("property: log_gamma' agrees with digamma") {
    const double h = 1e-5;
    for (double x = 0.1; x <= 100.0; x *= 1.37) {
      CAPTURE(x);
      const double fd = (log_gamma(x + h) - log_gamma(x - h)) / (2 * h);
      CHECK(std::abs(fd - digamma(x)) <= 1e-6 * std::max(1.0, std::abs(digamma(x))));
    }
  }

  TEST_CASE("property: digamma is increasing") {
    double previous = digamma(1e-6);
    for (double x = 2e-6; x <= 1e6; x *= 1.9) {
      const double current = digamma(x);
      CHECK(current > previous);
      previous = current;
    }
  }

  TEST_CASE("non-positive and non-finite arguments are rejected") {
    CHECK_THROWS_AS(digamma(0.0), DataError);
    CHECK_THROWS_AS(digamma(-1.5), DataError);
    CHECK_THROWS_AS(log_gamma(0.0), DataError);
    CHECK_THROWS_AS(log_gamma(std::nan("")), DataError);
    CHECK_THROWS_AS(digamma(INFINITY), DataError);
  }

  TEST_CASE("expected log h under a Dirichlet") {
    Mat one(1, 3);
    one << 0.3, 2.0, 50.0;
    CHECK(expected_log_h_dirichlet(one) == Mat::Ones(1, 3));

    Mat ones = Mat::Ones(2, 1);
    const Mat h1 = expected_log_h_dirichlet(ones);
    CHECK(std::abs(h1(0, 0) - std::exp(-1.0)) <= 1e-15);
    CHECK(std::abs(h1(1, 0) - std::exp(-1.0)) <= 1e-15);

    const Mat h2 = expected_log_h_dirichlet(Mat(Mat::Constant(2, 1, 2.0)));
    CHECK(std::abs(h2(0, 0) - 0.43459820850707822316) <= 1e-15);

    const Mat beta = random_positive(4, 6, 3, 0.05, 30.0);
    const Mat h = expected_log_h_dirichlet(beta);
    CHECK(h.minCoeff() > 0);
    CHECK(h.maxCoeff() < 1);
    CHECK(max_abs_diff(h.array().log().matrix(), expected_log_dirichlet(beta)) <= 1e-12);
    CHECK_THROWS_AS(expected_log_h_dirichlet(Mat(Mat::Zero(2, 1))), DataError);
  }

  TEST_CASE("expected log h under a Gamma") {
    const Mat a = expected_log_h_gamma(Mat(Mat::Ones(1, 1)), Mat(Mat::Ones(1, 1)));
    CHECK(std::abs(a(0, 0) - 0.56145948356688516982) <= 1e-13);
    const Mat b = expected_log_h_gamma(Mat(Mat::Constant(1, 1, 2.0)), Mat(Mat::Constant(1, 1, 2.0)));
    CHECK(std::abs(b(0, 0) - 0.76310255579793194024) <= 1e-13);

    const Mat beta = random_positive(3, 4, 8, 0.1, 10.0);
    const Mat rate = random_positive(3, 4, 9, 0.1, 10.0);
    const Mat base = expected_log_h_gamma(beta, rate);
    CHECK(max_rel_diff(expected_log_h_gamma(beta, Mat(rate * 4.0)), Mat(base / 4.0)) <= 1e-15);
    CHECK_THROWS_AS(expected_log_h_gamma(beta, Mat(Mat::Zero(3, 4))), DataError);
  }
}
