#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "logz/identities.hpp"
#include "logz/models/curie_weiss.hpp"
#include "logz/models/gaussian.hpp"
#include "logz/models/random_discrete.hpp"
#include "logz/oracle.hpp"
#include "test_support.hpp"

using namespace logz;
using logz::testing::IndependentModel;
using logz::testing::NoiselessBinaryModel;

TEST_CASE("log_theta: normalization, two-point sum, Gaussian MGF") {
  models::CurieWeissModel pm1(1, 0.0, 0.0, 1.0);  // uniform on {-1, +1}
  CHECK(log_theta(pm1, TiltVector::zeros(1)) == doctest::Approx(0.0).epsilon(1e-12));
  Eigen::VectorXd one(1);
  one << 1.0;
  // Two-term sum: ln[(e^1 + e^{-1})/2] = ln cosh 1.
  const double two_term = std::log(0.5 * (std::exp(1.0) + std::exp(-1.0)));
  CHECK(log_theta(pm1, TiltVector(one)) == doctest::Approx(two_term).epsilon(1e-12));
  CHECK(two_term == doctest::Approx(0.43378).epsilon(1e-4));

  models::GaussianAwgnModel g(1, 1.0, 1.0);
  CHECK(log_theta(g, TiltVector(one)) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(log_theta(g, TiltVector::zeros(1)) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("fisher matrix: independence, Gaussian, Curie-Weiss") {
  IndependentModel ind(2, 0.6);
  CHECK(fisher_matrix(ind, ExpectationConfig::enumerate()).cwiseAbs().maxCoeff() <= 1e-10);

  models::GaussianAwgnModel g(1, 1.0, 1.0);
  // J = Cov{X} - E = 1 - 0.5, with E pinned by the oracle.
  const auto om = oracle::oracle_mmse(g, ExpectationConfig::quadrature());
  CHECK(om.value == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(fisher_matrix(g, ExpectationConfig::quadrature())(0, 0) ==
        doctest::Approx(1.0 - om.value).epsilon(1e-6));

  models::CurieWeissModel cw(2, 0.0, 0.0, 1.0);
  const Eigen::MatrixXd j = fisher_matrix(cw, ExpectationConfig::enumerate());
  const auto cw_mmse = oracle::oracle_mmse(cw, ExpectationConfig::enumerate());
  for (int i = 0; i < 2; ++i)
    CHECK(j(i, i) == doctest::Approx(1.0 - cw_mmse.value / 2.0).epsilon(1e-10));
}

TEST_CASE("xi matrix and the Xi = J + E{X}E{X}^T chain") {
  IndependentModel ind(2, 0.7);
  const Eigen::MatrixXd xi = xi_matrix(ind, ExpectationConfig::enumerate());
  const PriorMoments prior = prior_moments(ind);
  CHECK((xi - prior.mean * prior.mean.transpose()).cwiseAbs().maxCoeff() <= 1e-10);

  models::GaussianAwgnModel g(1, 1.0, 1.0);
  CHECK(xi_matrix(g, ExpectationConfig::quadrature())(0, 0) ==
        doctest::Approx(0.5).epsilon(1e-6));

  for (uint64_t seed : {101, 102, 103}) {
    const auto model = models::make_random_discrete(seed);
    const ExpectationConfig cfg = ExpectationConfig::enumerate();
    const Eigen::MatrixXd xi_m = xi_matrix(*model, cfg);
    const Eigen::MatrixXd j_m = fisher_matrix(*model, cfg);
    const PriorMoments pm = prior_moments(*model);
    CHECK((xi_m - j_m - pm.mean * pm.mean.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("information density: independence, noiseless, Gaussian ratio") {
  IndependentModel ind(2, 0.5);
  const TiltedEnsemble ens = make_tilted(ind, TiltVector::zeros(2));
  Eigen::VectorXd x(2), y(2);
  x << 1.0, -1.0;
  y << 0.0, 1.0;
  CHECK(information_density(ens, x, y) == doctest::Approx(0.0).epsilon(1e-12));

  NoiselessBinaryModel nb(1);
  const TiltedEnsemble ens2 = make_tilted(nb, TiltVector::zeros(1));
  Eigen::VectorXd x1(1), y1(1);
  x1 << 1.0;
  y1 << 1.0;
  CHECK(information_density(ens2, x1, y1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  models::GaussianAwgnModel g(1, 1.0, 1.0);
  const TiltedEnsemble ens3 = make_tilted(g, TiltVector::zeros(1));
  // Direct density ratio: P(y|x) is N(x, 1), P(y) is N(0, 2).
  auto log_normal = [](double v, double mean, double var) {
    return -0.5 * (v - mean) * (v - mean) / var - 0.5 * std::log(2.0 * std::numbers::pi * var);
  };
  const double want = log_normal(1.0, 1.0, 1.0) - log_normal(1.0, 0.0, 2.0);
  CHECK(information_density(ens3, x1, y1) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("information-density link: score covariance equals J") {
  const auto model = models::make_random_discrete(111);
  const int n = model->input_dim();
  const ExpectationConfig cfg = ExpectationConfig::enumerate();
  const Eigen::MatrixXd j = fisher_matrix(*model, cfg);
  const PriorMoments prior = prior_moments(*model);
  // grad_0 i(x; y) = E{X} - E{X|y}: covariance taken over the joint law.
  auto h = [&](const Eigen::VectorXd&, const Eigen::VectorXd& y) {
    const Eigen::VectorXd s =
        prior.mean - analytic_posterior_moments(*model, y, TiltVector::zeros(n)).mean;
    Eigen::VectorXd v(n * n + n);
    for (int i = 0; i < n; ++i)
      for (int jj = 0; jj < n; ++jj) v[i * n + jj] = s[i] * s[jj];
    v.tail(n) = s;
    return v;
  };
  const VecExpectation e = expect_over_xy(*model, cfg, n * n + n, h);
  Eigen::MatrixXd cov(n, n);
  for (int i = 0; i < n; ++i)
    for (int jj = 0; jj < n; ++jj)
      cov(i, jj) = e.mean[i * n + jj] - e.mean[n * n + i] * e.mean[n * n + jj];
  CHECK((cov - j).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("fisher consistency: outer-product form vs negative expected Hessian") {
  const auto model = models::make_random_discrete(121);
  const ExpectationConfig cfg = ExpectationConfig::enumerate();
  const Eigen::MatrixXd outer = fisher_matrix(*model, cfg);
  const Eigen::MatrixXd hess = fisher_matrix_hessian_route(*model, cfg);
  CHECK((outer - hess).cwiseAbs().maxCoeff() <= 1e-10);
  // And through central differences, at differentiation tolerance.
  DiffConfig fd;
  fd.scheme = DiffScheme::central_difference;
  const Eigen::MatrixXd outer_fd = fisher_matrix(*model, cfg, fd);
  CHECK((outer - outer_fd).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("four MMSE formulas: trivial, Gaussian, random models vs oracle") {
  NoiselessBinaryModel nb(2);
  const MmseReport rep0 = mmse_all_formulas(nb, ExpectationConfig::enumerate());
  for (int i = 0; i < 4; ++i) CHECK(std::abs(rep0.formula_values[i]) <= 1e-12);

  models::GaussianAwgnModel g(1, 1.0, 1.0);
  const MmseReport repg = mmse_all_formulas(g, ExpectationConfig::quadrature());
  for (int i = 0; i < 4; ++i)
    CHECK(repg.formula_values[i] == doctest::Approx(0.5).epsilon(1e-7));

  for (uint64_t seed : {131, 132, 133, 134, 135}) {
    const auto model = models::make_random_discrete(seed);
    const MmseReport rep = mmse_all_formulas(*model, ExpectationConfig::enumerate());
    CHECK(rep.spread <= 1e-8);
    const auto om = oracle::oracle_mmse(*model, ExpectationConfig::enumerate());
    CHECK(std::abs(rep.mmse() - om.value) <= 1e-8);
    // Decomposition identities, entrywise.
    const PriorMoments prior = prior_moments(*model);
    const Eigen::MatrixXd second = prior.cov + prior.mean * prior.mean.transpose();
    CHECK((rep.fisher - (rep.cov_x - rep.error_cov)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((rep.xi - (second - rep.error_cov)).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("four formulas agree within 3 sigma under Monte Carlo") {
  const auto model = models::make_random_discrete(141);
  const MmseReport rep =
      mmse_all_formulas(*model, ExpectationConfig::monte_carlo(20000, 17));
  REQUIRE(rep.formula_stderr.has_value());
  const MmseReport exact = mmse_all_formulas(*model, ExpectationConfig::enumerate());
  CHECK(std::abs(rep.mmse() - exact.mmse()) <=
        4.0 * std::max((*rep.formula_stderr)[0], 1e-6));
}

TEST_CASE("FormulaDisagreement flags a broken differentiation setup") {
  const auto model = models::make_random_discrete(151);
  DiffConfig broken;
  broken.scheme = DiffScheme::central_difference;
  broken.step = 0.9;  // absurd step: second differences are badly biased
  broken.richardson = false;
  CHECK_THROWS_AS(mmse_all_formulas(*model, ExpectationConfig::enumerate(), broken),
                  FormulaDisagreement);
}

TEST_CASE("information-density replacement in formulas two and three") {
  // Replacing ln P_lambda(Y) by the information density leaves formula (iii)
  // unchanged and flips the sign of the Hessian term in formula (ii), since
  // d i / d lambda = -d ln P_lambda(y) / d lambda.
  const auto model = models::make_random_discrete(161);
  const int n = model->input_dim();
  const ExpectationConfig cfg = ExpectationConfig::enumerate();
  const PriorMoments prior = prior_moments(*model);
  const double sum_var = prior.cov.diagonal().sum();
  auto h = [&](const Eigen::VectorXd&, const Eigen::VectorXd& y) {
    const PosteriorMoments pm = analytic_posterior_moments(*model, y, TiltVector::zeros(n));
    Eigen::VectorXd v(2);
    // d^2 i / d lambda_i^2 = -(Var{X_i|y} - Var{X_i}).
    v[0] = -(pm.cov.diagonal() - prior.cov.diagonal()).sum();
    // (d i / d lambda_i)^2 = (E{X_i|y} - E{X_i})^2.
    v[1] = (pm.mean - prior.mean).squaredNorm();
    return v;
  };
  const VecExpectation e = expect_over_xy(*model, cfg, 2, h);
  const double via_ii = sum_var - e.mean[0];
  const double via_iii = sum_var - e.mean[1];
  const auto om = oracle::oracle_mmse(*model, cfg);
  CHECK(via_ii == doctest::Approx(om.value).epsilon(1e-9));
  CHECK(via_iii == doctest::Approx(om.value).epsilon(1e-9));
}

TEST_CASE("mismatched mse: matched reduction, Gaussian 5/9, dominance") {
  for (uint64_t seed : {171, 172}) {
    const auto model = models::make_random_discrete(seed);
    const ExpectationConfig cfg = ExpectationConfig::enumerate();
    const MismatchReport self = mismatched_mse(*model, *model, cfg);
    const double matched = mmse_all_formulas(*model, cfg).mmse();
    CHECK(std::abs(self.mse - matched) <= 1e-8);
  }

  models::GaussianAwgnModel p(1, 1.0, 1.0), q(1, 2.0, 1.0);
  const MismatchReport rep = mismatched_mse(p, q, ExpectationConfig::quadrature());
  CHECK(rep.mse == doctest::Approx(5.0 / 9.0).epsilon(1e-7));
  CHECK(rep.error_cov.trace() == doctest::Approx(rep.mse).epsilon(1e-12));
  CHECK(rep.mse >= 0.5);  // dominance over the matched mmse

  // Channel-only mismatch: true beta = 1, assumed beta = 2. The estimator is
  // (2/3) y under the true law, so the mse has the same closed form 5/9.
  models::GaussianAwgnModel q2(1, 1.0, 2.0);
  const MismatchReport rep2 = mismatched_mse(p, q2, ExpectationConfig::quadrature());
  CHECK(rep2.mse == doctest::Approx(5.0 / 9.0).epsilon(1e-7));
  CHECK(rep2.mse >= 0.5);
  // Monte Carlo oracle: sample under P, apply the frozen mismatched rule.
  CounterRng rng = CounterRng::make(7, {stream::kOracleMc});
  double s = 0.0;
  const long n = 400000;
  for (long i = 0; i < n; ++i) {
    const double x = rng.gaussian();
    const double y = x + rng.gaussian();
    const double err = x - (2.0 / 3.0) * y;
    s += err * err;
  }
  const double mc = s / n;
  CHECK(std::abs(rep2.mse - mc) <= 3.0 * std::sqrt(2.0) * (5.0 / 9.0) / std::sqrt((double)n));
}

TEST_CASE("mismatch rejects incompatible alphabets") {
  models::GaussianAwgnModel p(1, 1.0, 1.0);
  models::CurieWeissModel q(1, 0.0, 0.0, 1.0);
  CHECK_THROWS_AS(mismatched_mse(p, q, ExpectationConfig::enumerate()), AlphabetMismatch);
  models::GaussianAwgnModel p2(2, 1.0, 1.0);
  CHECK_THROWS_AS(mismatched_mse(p, p2, ExpectationConfig::quadrature()), AlphabetMismatch);
}

TEST_CASE("mutual information: zero under independence, nonnegative otherwise") {
  IndependentModel ind(2, 0.5);
  CHECK(std::abs(mutual_information(ind, ExpectationConfig::enumerate())) <= 1e-12);
  const auto model = models::make_random_discrete(181);
  CHECK(mutual_information(*model, ExpectationConfig::enumerate()) >= -1e-12);
}
